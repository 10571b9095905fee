// Copyright 2026 The bboxaug Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BBOXAUG_BBOXAUG_HPP_
#define BBOXAUG_BBOXAUG_HPP_

#include "bboxaug/bbox_only_ops.hpp"
#include "bboxaug/color_ops.hpp"
#include "bboxaug/dataset.hpp"
#include "bboxaug/geom.hpp"
#include "bboxaug/geometric_ops.hpp"
#include "bboxaug/image_io.hpp"
#include "bboxaug/policy.hpp"
#include "bboxaug/random.hpp"
#include "bboxaug/raster.hpp"
#include "bboxaug/search.hpp"

#endif  // BBOXAUG_BBOXAUG_HPP_
