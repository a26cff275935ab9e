#pragma once
// Umbrella header.

#include "wavetrap/config.hpp"
#include "wavetrap/estimates.hpp"
#include "wavetrap/model.hpp"
#include "wavetrap/multipliers.hpp"
#include "wavetrap/numerics.hpp"
#include "wavetrap/report.hpp"
#include "wavetrap/scenario.hpp"
#include "wavetrap/solver.hpp"
#include "wavetrap/spectral.hpp"
#include "wavetrap/sweep.hpp"
#include "wavetrap/windows.hpp"
