#pragma once
// Umbrella header for the whole library.

#include "mlqd/cli.hpp"
#include "mlqd/compression.hpp"
#include "mlqd/config.hpp"
#include "mlqd/error.hpp"
#include "mlqd/linalg.hpp"
#include "mlqd/loqd.hpp"
#include "mlqd/metrics.hpp"
#include "mlqd/parallel.hpp"
#include "mlqd/quadrature.hpp"
#include "mlqd/record.hpp"
#include "mlqd/spectral.hpp"
#include "mlqd/timestepper.hpp"
#include "mlqd/transport.hpp"
