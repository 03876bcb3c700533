/*
 * Copyright 2026 The fagtb Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAGTB_FAGTB_HPP_
#define FAGTB_FAGTB_HPP_

#include "fagtb/adversary.hpp"
#include "fagtb/cart.hpp"
#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/metrics.hpp"
#include "fagtb/model.hpp"
#include "fagtb/synthetic.hpp"
#include "fagtb/trainer.hpp"

#endif  // FAGTB_FAGTB_HPP_
