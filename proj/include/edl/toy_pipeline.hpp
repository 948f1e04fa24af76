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

// Desk-scale end-to-end model: one unrolled RISTA layer followed by a linear
// head, trained with cross-entropy on seeded two-class blobs and attacked with
// FGSM through the exact layer gradient.

#include <cstdint>
#include <string>
#include <vector>

#include "edl/learning.hpp"
#include "edl/tensor.hpp"

namespace edl
{

struct LabeledSignal
{
    Signal<double> x;
    int label = 0;
};

struct ToyDataset
{
    std::vector<LabeledSignal> train;
    std::vector<LabeledSignal> eval;
    int classes = 2;
};

struct BlobSpec
{
    Index rows = 8;
    Index cols = 8;
    Index channels = 1;
    int classes = 2;
    int train_per_class = 40;
    int eval_per_class = 40;
    double separation = 0.15;  // amplitude of the per-class mean pattern around 0.5
    double spread = 0.1;       // per-pixel Gaussian noise around the class mean
};

/// Class means 0.5 + separation * p_k with p_k a seeded +-1 pattern; samples
/// add N(0, spread^2) per pixel and are clamped to [0, 1].
ToyDataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

enum class DictionaryInit
{
    Identity,  // centered delta on channel d mod C plus small Gaussian jitter
    Gaussian
};

struct ToyConfig
{
    double beta = 1.0;       // layer beta once switched
    int switch_epoch = 0;    // epochs before this train with beta = 1
    int epochs = 50;
    int batch_size = 8;
    double lr = 0.1;         // head
    double dict_lr = 0.01;   // dictionary
    double lambda = 0.1;
    double epsilon = 1e-3;
    int steps = 3;
    Index atoms = 4;         // D
    Index kernel_size = 3;
    DictionaryInit init = DictionaryInit::Identity;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ToyModel
{
    Dictionary<double> dict;
    ClassifierHead<double> head;
    SolverConfig<double> layer;  // gamma fixed from the last training epoch
};

struct EvalResult
{
    double clean_accuracy = 0;
    double attacked_accuracy = 0;
    double embedding_difference = 0;  // mean ||z(x') - z(x)|| / ||z(x)||
    double mean_loss = 0;
};

struct TrainResult
{
    ToyModel model;
    std::vector<double> epoch_loss;
};

/// Largest default step size valid for every training signal at the current
/// dictionary.
double pipeline_step_size(const std::vector<LabeledSignal>& data, const Dictionary<double>& dict,
                          double beta, double epsilon);

TrainResult train_toy_pipeline(const ToyDataset& data, const ToyConfig& cfg);

/// Gradient of the cross-entropy loss with respect to the input signal.
Signal<double> input_gradient(const ToyModel& model, const LabeledSignal& sample);

EvalResult evaluate(const ToyModel& model, const std::vector<LabeledSignal>& data, double budget);

}  // namespace edl
