#pragma once

#include "semstream/codec.hpp"
#include "semstream/coordinator.hpp"
#include "semstream/dsp.hpp"
#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/kg_io.hpp"
#include "semstream/rng.hpp"
#include "semstream/runner.hpp"
#include "semstream/scenario.hpp"
#include "semstream/sound.hpp"
#include "semstream/sync.hpp"
#include "semstream/token.hpp"
#include "semstream/transmission.hpp"
#include "semstream/wav.hpp"
