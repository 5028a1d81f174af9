#pragma once

#include "huapadic/rng.hpp"
#include "huapadic/rational.hpp"
#include "huapadic/qseries.hpp"
#include "huapadic/padic_scalar.hpp"
#include "huapadic/padic_matrix.hpp"
#include "huapadic/laws.hpp"
#include "huapadic/samplers.hpp"
#include "huapadic/experiments.hpp"
