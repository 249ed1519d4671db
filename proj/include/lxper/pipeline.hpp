#pragma once

// Corpus-level glue: featurize a corpus, then split, select, train and
// evaluate in one deterministic run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lxper/baselines.hpp"
#include "lxper/corpus.hpp"
#include "lxper/error.hpp"
#include "lxper/features.hpp"
#include "lxper/model.hpp"
#include "lxper/selection.hpp"
#include "lxper/textproc.hpp"

namespace lxper {

struct FeaturizedCorpus {
  std::vector<AnalyzedText> analyzed;
  LabeledFeatures features;
};

/// Heuristic parses for every text; a failing text aborts with its id.
inline FeaturizedCorpus featurize_corpus(const GradedTextCorpus& corpus,
                                         const ExtractionResources& resources) {
  FeaturizedCorpus out;
  for (const auto& t : corpus.texts()) {
    try {
      AnalyzedText analyzed = annotate(t.text);
      out.features.rows.push_back(extract_all(analyzed, resources));
      out.features.grades.push_back(t.grade);
      out.analyzed.push_back(std::move(analyzed));
    } catch (const Error& e) {
      throw Error("text '" + t.id + "': " + e.what());
    }
  }
  return out;
}

inline std::vector<ComparisonInput> comparison_inputs(
    const GradedTextCorpus& corpus, const FeaturizedCorpus& featurized) {
  std::vector<ComparisonInput> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back({corpus.texts()[i].grade, featurized.analyzed[i],
                   featurized.features.rows[i]});
  }
  return out;
}

struct TrainingOptions {
  double significance = kDefaultSignificance;
  double pair_threshold = kDefaultPairThreshold;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;
  FamilyVersion version = FamilyVersion::S_CM_WD;
  std::string corpus_id;
};

struct TrainingRun {
  CorpusSplit split;
  FeaturizedCorpus train;
  FeaturizedCorpus test;
  SelectionResult selection;
  std::vector<VersionResult> versions;
  RegressionModel model;  // the requested version
};

/// Splits the corpus, selects features on the training half, trains all
/// seven versions and evaluates them on the held-out half.
inline TrainingRun run_training(const GradedTextCorpus& corpus,
                                const ExtractionResources& resources,
                                const TrainingOptions& options) {
  TrainingRun run;
  run.split = split_corpus(corpus, options.test_fraction, options.seed);
  run.train = featurize_corpus(run.split.train, resources);
  run.test = featurize_corpus(run.split.test, resources);
  run.selection =
      select_features(run.train.features.rows, run.train.features.grades,
                      options.significance, options.pair_threshold);
  run.versions = train_versions(run.train.features, run.test.features,
                                run.selection, options.corpus_id);
  for (const auto& v : run.versions) {
    if (v.version != options.version) continue;
    if (!v.model) {
      throw Error("version " + std::string(version_name(v.version)) +
                  " failed: " + v.error);
    }
    run.model = *v.model;
  }
  return run;
}

}  // namespace lxper
