#pragma once

#include "granger_lab/core.hpp"
#include "granger_lab/criteria.hpp"
#include "granger_lab/datagen.hpp"
#include "granger_lab/experiments.hpp"
#include "granger_lab/granger.hpp"
#include "granger_lab/io.hpp"
#include "granger_lab/regress.hpp"
#include "granger_lab/rng.hpp"

namespace granger_lab {
inline constexpr const char* kVersion = "0.1.0";
}
