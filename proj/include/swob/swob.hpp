#pragma once

// Convenience umbrella: pulls in the whole library.

#include "swob/adversary.hpp"
#include "swob/analysis.hpp"
#include "swob/config.hpp"
#include "swob/core.hpp"
#include "swob/csv.hpp"
#include "swob/engine.hpp"
#include "swob/error.hpp"
#include "swob/learner.hpp"
#include "swob/rng.hpp"
#include "swob/verify.hpp"
