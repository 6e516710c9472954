/// @file qcle_lab.hpp
/// @brief Umbrella header for the two-level quantum-classical dynamics lab.
#pragma once

#include "constmodel.hpp"
#include "core.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "observables.hpp"
#include "qcle.hpp"
#include "runner.hpp"
#include "tdse.hpp"
#include "wigner.hpp"
