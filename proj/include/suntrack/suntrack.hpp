#pragma once

#include "suntrack/calendar.hpp"
#include "suntrack/detection.hpp"
#include "suntrack/error.hpp"
#include "suntrack/filenames.hpp"
#include "suntrack/geometry.hpp"
#include "suntrack/image.hpp"
#include "suntrack/metrics.hpp"
#include "suntrack/parallel.hpp"
#include "suntrack/pipeline.hpp"
#include "suntrack/plot.hpp"
#include "suntrack/png_io.hpp"
#include "suntrack/regression.hpp"
#include "suntrack/store_io.hpp"
#include "suntrack/synth.hpp"
#include "suntrack/trajectory.hpp"
