#ifndef OOBSIM_OOBSIM_HPP
#define OOBSIM_OOBSIM_HPP

// Umbrella header for the LED-to-camera secure initialization simulator.

#include "oobsim/bitstring.hpp"
#include "oobsim/common.hpp"
#include "oobsim/config.hpp"
#include "oobsim/crypto.hpp"
#include "oobsim/decoder.hpp"
#include "oobsim/encoder.hpp"
#include "oobsim/harness.hpp"
#include "oobsim/image.hpp"
#include "oobsim/protocol.hpp"
#include "oobsim/rng.hpp"
#include "oobsim/scenario_io.hpp"
#include "oobsim/wire.hpp"

#endif  // OOBSIM_OOBSIM_HPP
