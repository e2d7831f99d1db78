#pragma once

#include "hedb/crypto/asym.hpp"
#include "hedb/crypto/homomorphic.hpp"
#include "hedb/crypto/keys.hpp"
#include "hedb/crypto/ore.hpp"
#include "hedb/crypto/prf.hpp"
#include "hedb/crypto/symmetric.hpp"
