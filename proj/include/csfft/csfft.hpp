#pragma once

// Sparse recovery of continuous-frequency tones from few samples over a
// bounded duration: random frequency hashing into bins, flat window
// measurements, noisy t-ary phase search, and median-merged stages.

#include "csfft/baselines.hpp"
#include "csfft/common.hpp"
#include "csfft/fft.hpp"
#include "csfft/hashing.hpp"
#include "csfft/locate.hpp"
#include "csfft/metrics.hpp"
#include "csfft/quadrature.hpp"
#include "csfft/recovery.hpp"
#include "csfft/rng.hpp"
#include "csfft/signal_model.hpp"
#include "csfft/windows.hpp"
