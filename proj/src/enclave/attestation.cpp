#include "hedb/enclave/attestation.hpp"

#include <algorithm>

#include "hedb/crypto/crypto.hpp"

namespace hedb {

namespace {

constexpr std::size_t kSpidLen = 16;

template <std::size_t N>
std::array<std::uint8_t, N> take(ByteReader& r) {
  std::array<std::uint8_t, N> out{};
  ByteView v = r.raw(N);
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::array<std::uint8_t, 32> hash32(ByteView b) {
  Bytes h = sha256(b);
  std::array<std::uint8_t, 32> out{};
  std::copy(h.begin(), h.end(), out.begin());
  return out;
}

std::array<std::uint8_t, 32> report_data_for(const PublicKey32& ga, const PublicKey32& gb, const Key16& vk,
                                             const std::array<std::uint8_t, 32>& transcript) {
  return hash32(concat({ga, gb, vk, transcript}));
}

Bytes result_aad(const std::array<std::uint8_t, 32>& transcript) {
  return concat({to_bytes("hedb-att-result"), transcript});
}

}  // namespace

const char* att_phase_name(AttPhase p) {
  switch (p) {
    case AttPhase::kInit: return "init";
    case AttPhase::kMsg0: return "msg0";
    case AttPhase::kMsg1: return "msg1";
    case AttPhase::kMsg2: return "msg2";
    case AttPhase::kMsg3: return "msg3";
    case AttPhase::kAttested: return "attested";
    case AttPhase::kFailed: return "failed";
  }
  return "?";
}

Bytes encode_frame(const Frame& f) {
  ByteWriter w(f.payload.size() + 5);
  w.u8(static_cast<std::uint8_t>(f.type));
  w.blob(f.payload);
  return std::move(w).take();
}

Frame decode_frame(ByteView b) {
  ByteReader r(b);
  std::uint8_t t = r.u8();
  if (t < 1 || t > 7) throw Error(ErrorCode::kFormat, "unknown attestation message type");
  Frame f{static_cast<MsgType>(t), r.blob()};
  r.expect_done();
  return f;
}

SessionKeys derive_session_keys(const std::array<std::uint8_t, 32>& dh_key) {
  auto derive = [&](const char* label, std::size_t n) {
    return hkdf_sha256(dh_key, to_bytes("hedb-attestation"), to_bytes(label), n);
  };
  SessionKeys k;
  Bytes smk = derive("SMK", 16), sk = derive("SK", 32), mk = derive("MK", 16), vk = derive("VK", 16);
  std::copy(smk.begin(), smk.end(), k.smk.begin());
  std::copy(sk.begin(), sk.end(), k.sk.begin());
  std::copy(mk.begin(), mk.end(), k.mk.begin());
  std::copy(vk.begin(), vk.end(), k.vk.begin());
  return k;
}

Bytes Quote::signed_part() const {
  ByteWriter w;
  w.raw(measurement);
  w.u32(epid);
  w.raw(report_data);
  return std::move(w).take();
}

Bytes Quote::serialize() const {
  Bytes out = signed_part();
  out.insert(out.end(), signature.begin(), signature.end());
  return out;
}

Quote Quote::parse(ByteView b) {
  ByteReader r(b);
  Quote q;
  q.measurement = take<32>(r);
  q.epid = r.u32();
  q.report_data = take<32>(r);
  q.signature = take<64>(r);
  r.expect_done();
  return q;
}

QuoteAuthority::QuoteAuthority() : key_(Ed25519KeyPair::from_seed(sha256(to_bytes("hedb-test-quoting-key")))) {}

Quote QuoteAuthority::make_quote(const std::array<std::uint8_t, 32>& measurement, std::uint32_t epid,
                                 const std::array<std::uint8_t, 32>& report_data) const {
  Quote q{measurement, epid, report_data, {}};
  q.signature = ed25519_sign(key_, q.signed_part());
  return q;
}

bool QuoteAuthority::verify(const Quote& q) const { return ed25519_verify(key_.public_key, q.signed_part(), q.signature); }

std::array<std::uint8_t, 32> enclave_measurement(const std::string& identity) {
  return hash32(to_bytes("hedb-measurement:" + identity));
}

bool EpidRegistry::register_epid(std::uint32_t epid) {
  std::lock_guard lock(mu_);
  return seen_.insert(epid).second;
}

bool EpidRegistry::contains(std::uint32_t epid) const {
  std::lock_guard lock(mu_);
  return seen_.count(epid) != 0;
}

// ---- enclave side ----

EnclaveAttestor::EnclaveAttestor(Enclave& enclave, const QuoteAuthority& authority,
                                 const PublicKey32& client_signing_key, std::uint32_t epid)
    : enclave_(enclave), authority_(authority), client_key_(client_signing_key), epid_(epid) {}

std::vector<Bytes> EnclaveAttestor::send(MsgType t, Bytes payload) {
  Bytes f = encode_frame({t, std::move(payload)});
  if (phase_ != AttPhase::kMsg3 && phase_ != AttPhase::kAttested) transcript_.insert(transcript_.end(), f.begin(), f.end());
  return {f};
}

std::vector<Bytes> EnclaveAttestor::on_frame(ByteView raw) {
  if (phase_ == AttPhase::kFailed || phase_ == AttPhase::kAttested) return {};
  try {
    return handle(decode_frame(raw), raw);
  } catch (const Error& e) {
    phase_ = AttPhase::kFailed;
    failure_ = e.what();
    keys_.reset();
    return {};
  }
}

std::vector<Bytes> EnclaveAttestor::handle(const Frame& f, ByteView raw) {
  auto fail = [](const char* why) -> std::vector<Bytes> { throw Error(ErrorCode::kProtocol, why); };
  if (phase_ != AttPhase::kMsg3) transcript_.insert(transcript_.end(), raw.begin(), raw.end());
  ByteReader r(f.payload);
  switch (f.type) {
    case MsgType::kInit: {
      if (phase_ != AttPhase::kInit || saw_init_) return fail("unexpected init");
      take<16>(r);
      r.expect_done();
      saw_init_ = true;
      ByteWriter w;
      w.u32(epid_);
      auto out = send(MsgType::kMsg0, std::move(w).take());
      phase_ = AttPhase::kMsg0;
      return out;
    }
    case MsgType::kMsg0Ack: {
      if (phase_ != AttPhase::kMsg0) return fail("unexpected msg0 ack");
      if (r.u32() != epid_) return fail("epid mismatch in msg0 ack");
      r.expect_done();
      dh_ = X25519KeyPair::generate();
      Bytes ga(dh_->public_key.begin(), dh_->public_key.end());
      auto out = send(MsgType::kMsg1, std::move(ga));
      phase_ = AttPhase::kMsg1;
      return out;
    }
    case MsgType::kMsg2: {
      if (phase_ != AttPhase::kMsg1) return fail("unexpected msg2");
      PublicKey32 gb = take<32>(r);
      auto spid = take<kSpidLen>(r);
      Signature64 sig = take<64>(r);
      Mac16 mac = take<16>(r);
      r.expect_done();
      SessionKeys keys = derive_session_keys(x25519_shared(*dh_, gb));
      Mac16 expect = aes_cmac(keys.smk, concat({gb, spid, sig}));
      if (!constant_time_equal(mac, expect)) return fail("msg2 CMAC verification failed");
      if (!ed25519_verify(client_key_, concat({gb, dh_->public_key}), sig)) return fail("msg2 signature invalid");
      keys_ = keys;
      transcript_hash_ = hash32(transcript_);
      Quote q = authority_.make_quote(enclave_measurement(enclave_.config().sealing_identity), epid_,
                                      report_data_for(dh_->public_key, gb, keys.vk, transcript_hash_));
      Bytes qb = q.serialize();
      Mac16 m3 = aes_cmac(keys.smk, concat({dh_->public_key, qb}));
      ByteWriter w;
      w.raw(dh_->public_key);
      w.blob(qb);
      w.raw(m3);
      phase_ = AttPhase::kMsg3;
      return send(MsgType::kMsg3, std::move(w).take());
    }
    case MsgType::kResult: {
      if (phase_ != AttPhase::kMsg3) return fail("unexpected attestation result");
      std::uint8_t status = r.u8();
      Bytes sealed = r.blob();
      Mac16 mac = take<16>(r);
      r.expect_done();
      Bytes body = concat({ByteView(&status, 1), sealed});
      if (!constant_time_equal(mac, aes_cmac(keys_->mk, body))) return fail("result CMAC verification failed");
      if (status != 0) return fail("client rejected attestation");
      ByteReader sr(sealed);
      RndCipher c;
      c.nonce = take<12>(sr);
      c.body = sr.blob();
      c.tag = take<16>(sr);
      sr.expect_done();
      Bytes secret = aead_open(keys_->sk, c, result_aad(transcript_hash_));
      enclave_.provision(MasterKey::from_bytes(secret));
      phase_ = AttPhase::kAttested;
      return {};
    }
    default:
      return fail("message not expected by enclave");
  }
}

// ---- client side ----

ClientAttestor::ClientAttestor(const MasterKey& master, const QuoteAuthority& verifier, EpidRegistry& registry,
                               const Ed25519KeyPair& signing_key, std::array<std::uint8_t, 32> expected_measurement)
    : master_(master),
      verifier_(verifier),
      registry_(registry),
      signing_key_(signing_key),
      expected_measurement_(expected_measurement) {}

Bytes ClientAttestor::frame(MsgType t, Bytes payload) {
  Bytes f = encode_frame({t, std::move(payload)});
  if (t != MsgType::kResult) transcript_.insert(transcript_.end(), f.begin(), f.end());
  return f;
}

Bytes ClientAttestor::start() {
  if (phase_ != AttPhase::kInit || !transcript_.empty()) throw Error(ErrorCode::kProtocol, "session already started");
  Bytes nonce(16);
  random_fill(nonce);
  return frame(MsgType::kInit, std::move(nonce));
}

std::vector<Bytes> ClientAttestor::on_frame(ByteView raw) {
  if (phase_ == AttPhase::kFailed || phase_ == AttPhase::kAttested) return {};
  try {
    return handle(decode_frame(raw), raw);
  } catch (const Error& e) {
    phase_ = AttPhase::kFailed;
    failure_ = e.what();
    keys_.reset();
    return {};
  }
}

std::vector<Bytes> ClientAttestor::handle(const Frame& f, ByteView raw) {
  auto fail = [](const char* why) -> std::vector<Bytes> { throw Error(ErrorCode::kProtocol, why); };
  if (f.type != MsgType::kMsg3) transcript_.insert(transcript_.end(), raw.begin(), raw.end());
  ByteReader r(f.payload);
  switch (f.type) {
    case MsgType::kMsg0: {
      if (phase_ != AttPhase::kInit) return fail("unexpected msg0");
      epid_ = r.u32();
      r.expect_done();
      // A platform that already attested may not start over.
      if (!registry_.register_epid(epid_)) return fail("epid already registered; session terminated");
      phase_ = AttPhase::kMsg0;
      ByteWriter w;
      w.u32(epid_);
      return {frame(MsgType::kMsg0Ack, std::move(w).take())};
    }
    case MsgType::kMsg1: {
      if (phase_ != AttPhase::kMsg0) return fail("unexpected msg1");
      ga_ = take<32>(r);
      r.expect_done();
      phase_ = AttPhase::kMsg1;
      dh_ = X25519KeyPair::generate();
      SessionKeys keys = derive_session_keys(x25519_shared(*dh_, ga_));
      std::array<std::uint8_t, kSpidLen> spid{};
      std::copy_n(signing_key_.public_key.begin(), kSpidLen, spid.begin());
      Signature64 sig = ed25519_sign(signing_key_, concat({dh_->public_key, ga_}));
      Mac16 mac = aes_cmac(keys.smk, concat({dh_->public_key, spid, sig}));
      keys_ = keys;
      ByteWriter w;
      w.raw(dh_->public_key);
      w.raw(spid);
      w.raw(sig);
      w.raw(mac);
      Bytes out = frame(MsgType::kMsg2, std::move(w).take());
      transcript_hash_ = hash32(transcript_);
      phase_ = AttPhase::kMsg2;
      return {out};
    }
    case MsgType::kMsg3: {
      if (phase_ != AttPhase::kMsg2) return fail("unexpected msg3");
      PublicKey32 ga = take<32>(r);
      Bytes qb = r.blob();
      Mac16 mac = take<16>(r);
      r.expect_done();
      if (!constant_time_equal(mac, aes_cmac(keys_->smk, concat({ga, qb})))) return fail("msg3 CMAC verification failed");
      if (ga != ga_) return fail("msg3 Ga differs from msg1");
      Quote q = Quote::parse(qb);
      if (!verifier_.verify(q)) return fail("quote signature rejected");
      if (q.measurement != expected_measurement_) return fail("unexpected enclave measurement");
      if (q.epid != epid_) return fail("quote epid mismatch");
      if (q.report_data != report_data_for(ga_, dh_->public_key, keys_->vk, transcript_hash_))
        return fail("quote report data does not bind this session");
      phase_ = AttPhase::kMsg3;

      RndCipher sealed = aead_seal(keys_->sk, master_.secret(), result_aad(transcript_hash_));
      ByteWriter s;
      s.raw(sealed.nonce);
      s.blob(sealed.body);
      s.raw(sealed.tag);
      Bytes sealed_bytes = std::move(s).take();
      std::uint8_t status = 0;
      Mac16 m = aes_cmac(keys_->mk, concat({ByteView(&status, 1), sealed_bytes}));
      ByteWriter w;
      w.u8(status);
      w.blob(sealed_bytes);
      w.raw(m);
      phase_ = AttPhase::kAttested;
      return {frame(MsgType::kResult, std::move(w).take())};
    }
    default:
      return fail("message not expected by client");
  }
}

// ---- transport ----

void DuplexChannel::send(Side from, Bytes frame) {
  if (tamper_) tamper_(seq_, frame);
  ++seq_;
  (from == Side::kClient ? to_enclave_ : to_client_).push_back(std::move(frame));
}

std::optional<Bytes> DuplexChannel::receive(Side to) {
  auto& q = to == Side::kClient ? to_client_ : to_enclave_;
  if (q.empty()) return std::nullopt;
  Bytes f = std::move(q.front());
  q.pop_front();
  return f;
}

AttestationOutcome attest_and_provision(const MasterKey& master, Enclave& enclave, AttestationEnv& env,
                                        std::uint32_t epid, DuplexChannel::Tamper tamper) {
  enclave.clear_keys();
  DuplexChannel channel(std::move(tamper));
  ClientAttestor client(master, env.authority, env.registry, env.client_signing_key,
                        enclave_measurement(enclave.config().sealing_identity));
  EnclaveAttestor server(enclave, env.authority, env.client_signing_key.public_key, epid);

  channel.send(DuplexChannel::Side::kClient, client.start());
  bool progressed = true;
  while (progressed) {
    progressed = false;
    while (auto f = channel.receive(DuplexChannel::Side::kEnclave)) {
      progressed = true;
      for (auto& out : server.on_frame(*f)) channel.send(DuplexChannel::Side::kEnclave, std::move(out));
    }
    while (auto f = channel.receive(DuplexChannel::Side::kClient)) {
      progressed = true;
      for (auto& out : client.on_frame(*f)) channel.send(DuplexChannel::Side::kClient, std::move(out));
    }
  }

  AttestationOutcome o;
  o.client_phase = client.phase();
  o.enclave_phase = server.phase();
  o.client_keys = client.keys();
  o.enclave_keys = server.keys();
  o.frames = channel.frames_sent();
  o.ok = o.client_phase == AttPhase::kAttested && o.enclave_phase == AttPhase::kAttested && enclave.has_keys();
  if (!o.ok) {
    enclave.clear_keys();  // fail closed
    o.failure = !server.failure().empty() ? server.failure() : client.failure();
    if (o.failure.empty()) o.failure = "protocol stalled";
  }
  return o;
}

}  // namespace hedb
