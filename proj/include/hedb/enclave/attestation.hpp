#pragma once

// Remote-attestation key transfer. The client (data owner) and the enclave
// run an X25519 exchange, authenticate it with AES-CMAC under the derived
// SMK, and the enclave proves its identity with a quote over the transcript.
// The client then ships the master key encrypted under SK.
//
// Messages, framed as [type u8][len u32 LE][payload]:
//   client  -> enclave  init      client nonce (16)
//   enclave -> client   msg0      epid (u32)
//   client  -> enclave  msg0_ack  epid (u32)
//   enclave -> client   msg1      Ga (32)
//   client  -> enclave  msg2      Gb (32) | spid (16) | sig(Gb|Ga) (64) | cmac_smk (16)
//   enclave -> client   msg3      Ga (32) | quote | cmac_smk (16)
//   client  -> enclave  result    status u8 | AES-GCM_SK(master key) | cmac_mk (16)

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hedb/crypto/asym.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/enclave/enclave.hpp"

namespace hedb {

enum class AttPhase : std::uint8_t { kInit, kMsg0, kMsg1, kMsg2, kMsg3, kAttested, kFailed };
enum class MsgType : std::uint8_t { kInit = 1, kMsg0 = 2, kMsg0Ack = 3, kMsg1 = 4, kMsg2 = 5, kMsg3 = 6, kResult = 7 };

const char* att_phase_name(AttPhase p);

struct Frame {
  MsgType type = MsgType::kInit;
  Bytes payload;
};

Bytes encode_frame(const Frame& f);
Frame decode_frame(ByteView b);  // throws kFormat

using Key16 = std::array<std::uint8_t, 16>;

struct SessionKeys {
  Key16 smk{};
  Key32 sk{};
  Key16 mk{};
  Key16 vk{};
};

// Derives SMK/SK/MK/VK from the X25519 shared secret.
SessionKeys derive_session_keys(const std::array<std::uint8_t, 32>& dh_key);

struct Quote {
  std::array<std::uint8_t, 32> measurement{};
  std::uint32_t epid = 0;
  std::array<std::uint8_t, 32> report_data{};
  Signature64 signature{};

  Bytes signed_part() const;
  Bytes serialize() const;
  static Quote parse(ByteView b);
};

// Stand-in for the platform quoting service and its verifier: quotes are
// signed with a fixed test key.
class QuoteAuthority {
 public:
  QuoteAuthority();
  Quote make_quote(const std::array<std::uint8_t, 32>& measurement, std::uint32_t epid,
                   const std::array<std::uint8_t, 32>& report_data) const;
  bool verify(const Quote& q) const;
  const PublicKey32& public_key() const { return key_.public_key; }

 private:
  Ed25519KeyPair key_;
};

std::array<std::uint8_t, 32> enclave_measurement(const std::string& identity);

// Client-side record of epids already attested; a repeat terminates the session.
class EpidRegistry {
 public:
  bool register_epid(std::uint32_t epid);
  bool contains(std::uint32_t epid) const;

 private:
  mutable std::mutex mu_;
  std::set<std::uint32_t> seen_;
};

class EnclaveAttestor {
 public:
  EnclaveAttestor(Enclave& enclave, const QuoteAuthority& authority, const PublicKey32& client_signing_key,
                  std::uint32_t epid);

  std::vector<Bytes> on_frame(ByteView frame);
  AttPhase phase() const { return phase_; }
  const std::optional<SessionKeys>& keys() const { return keys_; }
  const std::string& failure() const { return failure_; }

 private:
  std::vector<Bytes> handle(const Frame& f, ByteView raw);
  std::vector<Bytes> send(MsgType t, Bytes payload);

  Enclave& enclave_;
  const QuoteAuthority& authority_;
  PublicKey32 client_key_;
  std::uint32_t epid_;
  AttPhase phase_ = AttPhase::kInit;
  bool saw_init_ = false;
  std::optional<X25519KeyPair> dh_;
  std::optional<SessionKeys> keys_;
  Bytes transcript_;  // every frame up to and including msg2
  std::array<std::uint8_t, 32> transcript_hash_{};
  std::string failure_;
};

class ClientAttestor {
 public:
  ClientAttestor(const MasterKey& master, const QuoteAuthority& verifier, EpidRegistry& registry,
                 const Ed25519KeyPair& signing_key, std::array<std::uint8_t, 32> expected_measurement);

  Bytes start();
  std::vector<Bytes> on_frame(ByteView frame);
  AttPhase phase() const { return phase_; }
  const std::optional<SessionKeys>& keys() const { return keys_; }
  const std::string& failure() const { return failure_; }

 private:
  std::vector<Bytes> handle(const Frame& f, ByteView raw);
  Bytes frame(MsgType t, Bytes payload);

  const MasterKey& master_;
  const QuoteAuthority& verifier_;
  EpidRegistry& registry_;
  const Ed25519KeyPair& signing_key_;
  std::array<std::uint8_t, 32> expected_measurement_;
  AttPhase phase_ = AttPhase::kInit;
  std::uint32_t epid_ = 0;
  std::optional<X25519KeyPair> dh_;
  PublicKey32 ga_{};
  std::optional<SessionKeys> keys_;
  Bytes transcript_;
  std::array<std::uint8_t, 32> transcript_hash_{};
  std::string failure_;
};

// In-process duplex channel. The optional tamper hook sees every frame in
// flight with its global sequence number and may modify it.
class DuplexChannel {
 public:
  using Tamper = std::function<void(std::size_t seq, Bytes& frame)>;
  enum class Side { kClient, kEnclave };

  explicit DuplexChannel(Tamper tamper = {}) : tamper_(std::move(tamper)) {}

  void send(Side from, Bytes frame);
  std::optional<Bytes> receive(Side to);
  std::size_t frames_sent() const { return seq_; }

 private:
  Tamper tamper_;
  std::deque<Bytes> to_client_;
  std::deque<Bytes> to_enclave_;
  std::size_t seq_ = 0;
};

struct AttestationEnv {
  QuoteAuthority authority;
  Ed25519KeyPair client_signing_key = Ed25519KeyPair::generate();
  EpidRegistry registry;
};

struct AttestationOutcome {
  bool ok = false;
  AttPhase client_phase = AttPhase::kInit;
  AttPhase enclave_phase = AttPhase::kInit;
  std::optional<SessionKeys> client_keys;
  std::optional<SessionKeys> enclave_keys;
  std::size_t frames = 0;
  std::string failure;
};

// Runs the whole exchange and, on success, leaves the master key provisioned
// inside the enclave. Any failure leaves the enclave without keys.
AttestationOutcome attest_and_provision(const MasterKey& master, Enclave& enclave, AttestationEnv& env,
                                        std::uint32_t epid, DuplexChannel::Tamper tamper = {});

}  // namespace hedb
