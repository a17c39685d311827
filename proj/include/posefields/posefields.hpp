#pragma once

#define POSEFIELDS_VERSION "0.1.0"

#include "posefields/augmentation.hpp"
#include "posefields/decoder.hpp"
#include "posefields/evaluation.hpp"
#include "posefields/fields.hpp"
#include "posefields/ingest.hpp"
#include "posefields/lane_geometry.hpp"
#include "posefields/parallel.hpp"
#include "posefields/random.hpp"
#include "posefields/render.hpp"
#include "posefields/scheduling.hpp"
#include "posefields/schema.hpp"
#include "posefields/types.hpp"
