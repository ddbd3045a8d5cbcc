#pragma once

#include "ssg3d/common.hpp"
#include "ssg3d/direction.hpp"
#include "ssg3d/encoder.hpp"
#include "ssg3d/graph.hpp"
#include "ssg3d/metrics.hpp"
#include "ssg3d/params_io.hpp"
#include "ssg3d/prompt.hpp"
#include "ssg3d/sampler.hpp"
#include "ssg3d/scene.hpp"
#include "ssg3d/training.hpp"
