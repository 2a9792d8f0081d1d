/*
 * Copyright 2026 The audiodream Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "audiodream/checkpoint.hpp"
#include "audiodream/clip.hpp"
#include "audiodream/dataset.hpp"
#include "audiodream/dreamer.hpp"
#include "audiodream/error.hpp"
#include "audiodream/genre_net.hpp"
#include "audiodream/layers.hpp"
#include "audiodream/optimizer.hpp"
#include "audiodream/resample.hpp"
#include "audiodream/tape.hpp"
#include "audiodream/tensor.hpp"
#include "audiodream/trainer.hpp"
#include "audiodream/wav.hpp"
