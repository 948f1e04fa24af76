/*
 * Copyright 2026 The EDL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace edl
{

class Error : public std::runtime_error
{
   public:
    using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter or non-finite input data.
class InvalidArgument : public Error
{
   public:
    using Error::Error;
};

/// Incompatible tensor shapes or channel counts.
class ShapeError : public Error
{
   public:
    using Error::Error;
};

/// A solver or training loop produced a non-finite value.
class DivergenceError : public Error
{
   public:
    DivergenceError(const std::string& what, int step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step)
    {
    }

    int step() const noexcept { return step_; }

   private:
    int step_;
};

}  // namespace edl
