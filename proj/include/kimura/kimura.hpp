#pragma once

#include "kimura/coefficients.hpp"
#include "kimura/common.hpp"
#include "kimura/evolution.hpp"
#include "kimura/grid.hpp"
#include "kimura/io.hpp"
#include "kimura/metric.hpp"
#include "kimura/montecarlo.hpp"
#include "kimura/qprocess.hpp"
#include "kimura/rng.hpp"
#include "kimura/scenario.hpp"
#include "kimura/spectral.hpp"
#include "kimura/tridiagonal.hpp"
#include "kimura/variational.hpp"
