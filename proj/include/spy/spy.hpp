// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "spy/annotation_io.hpp"
#include "spy/config.hpp"
#include "spy/core.hpp"
#include "spy/error.hpp"
#include "spy/eval.hpp"
#include "spy/fusion.hpp"
#include "spy/image.hpp"
#include "spy/parallel.hpp"
#include "spy/pipeline.hpp"
#include "spy/preprocess.hpp"
#include "spy/scorers.hpp"
#include "spy/shapedetect.hpp"
#include "spy/shapegen.hpp"
#include "spy/syc.hpp"
