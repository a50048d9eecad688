#pragma once

// Umbrella header for the noiselock library.

#include "noiselock/analytic.hpp"
#include "noiselock/common.hpp"
#include "noiselock/config.hpp"
#include "noiselock/dsp.hpp"
#include "noiselock/experiments.hpp"
#include "noiselock/io.hpp"
#include "noiselock/loop.hpp"
#include "noiselock/plant.hpp"
#include "noiselock/presets.hpp"
#include "noiselock/rng.hpp"
#include "noiselock/selftest.hpp"
#include "noiselock/spectral.hpp"
#include "noiselock/svg.hpp"
#include "noiselock/timeseries.hpp"
#include "noiselock/version.hpp"
