// kgrescore/trainer.h

// Copyright 2026  kgrescore authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef KGRESCORE_TRAINER_H_
#define KGRESCORE_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "kgrescore/features.h"
#include "kgrescore/kg.h"

namespace kgr {

using Hypothesis = std::pair<std::vector<std::string>, Weight>;

struct TrainingExample {
  std::string utt_id;
  std::vector<std::string> reference;
  std::vector<Hypothesis> nbest;
};

struct TrainerConfig {
  int epochs = 10;
  double learning_rate = 1.0;
  bool averaging = true;
  uint64_t seed = 1;
  bool shuffle = true;
  bool train_base_weight = true;
  Weight initial_base_weight = 1.0;
};

struct TrainStats {
  std::vector<int> mistakes_per_epoch;
  int updates = 0;
};

/// Word-level Levenshtein distance.
int EditDistance(const std::vector<std::string> &a,
                 const std::vector<std::string> &b);

/// Index of the n-best entry closest to the reference; ties go to the higher
/// base score, then to the earlier entry.  Throws on an empty list.
size_t OracleIndex(const TrainingExample &example);
inline const Hypothesis &OracleHypothesis(const TrainingExample &example) {
  return example.nbest[OracleIndex(example)];
}

/// Averaged structured perceptron over n-best lists with features
/// (base score, feature counts).  Input feature weights are ignored.
Model Train(const std::vector<TrainingExample> &examples,
            const std::vector<FeatureNGram> &features,
            const KnowledgeGraph &graph, const TrainerConfig &config,
            TrainStats *stats = nullptr);

// utt<TAB>REF<TAB>words, then HYP<TAB>base<TAB>words lines; blank line
// between examples.
std::vector<TrainingExample> ReadTrainingExamples(std::istream &is);
void WriteTrainingExamples(const std::vector<TrainingExample> &examples,
                           std::ostream &os);
std::vector<TrainingExample> LoadTrainingExamples(const std::string &path);

}  // namespace kgr

#endif  // KGRESCORE_TRAINER_H_
