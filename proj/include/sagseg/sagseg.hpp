#pragma once

// Umbrella header.

#include "sagseg/config.hpp"
#include "sagseg/errors.hpp"
#include "sagseg/evalkit.hpp"
#include "sagseg/geometry.hpp"
#include "sagseg/labeler.hpp"
#include "sagseg/parallel.hpp"
#include "sagseg/rasterizer.hpp"
#include "sagseg/refiner.hpp"
#include "sagseg/scene_io.hpp"
#include "sagseg/synth.hpp"
#include "sagseg/types.hpp"
