#pragma once
// Synthetic corpus generation and the noisy-annotation simulator: layout
// perturbation, synthetic tags/inquiries via a provider, guidance-label
// corruption, and annotation quality measurement.

#include <string>
#include <vector>

#include "david/document.hpp"

namespace david {

class AnnotationProvider;

struct CorpusSpec {
  int n_documents = 500;
  std::string document_kind = "form";  // "form" | "receipt"
  int fields_min = 4;
  int fields_max = 9;
  uint64_t seed = 0;
  LabelSpace gold_label_space;  // defaulted per kind when empty

  void validate() const;
};

struct LayoutNoiseConfig {
  double target_mean_iou = 0.3;  // desired corpus mean IoU(perturbed, gold), +-0.05
  double text_drop_rate = 0.15;
  double merge_split_rate = 0.06;
  uint64_t seed = 0;

  void validate() const;
};

struct LabelNoiseConfig {
  double lambda = 2.0;             // corrupt when |X| > lambda, X ~ N(0,1)
  std::string mode = "incorrect";  // "incorrect" | "incomplete"
  uint64_t seed = 0;

  void validate() const;
};

struct AnnotationQualityStats {
  std::vector<double> per_doc_iou;
  std::vector<double> per_doc_jaccard;
  double mean_iou = 0.0;
  double mean_jaccard = 0.0;
};

LabelSpace default_gold_space(const std::string& kind);
LabelSpace default_synthetic_space();

std::vector<Document> generate_corpus(const CorpusSpec& spec);

// Simulates an off-the-shelf layout tool: jittered/merged/split entity boxes,
// degraded entity text, token parents recomputed, gold annotations dropped.
Document perturb_layout_annotations(const Document& gold, const LayoutNoiseConfig& cfg);

// Every token gets a synthetic_label drawn from synthetic_space.
Document generate_synthetic_tags(const Document& doc, AnnotationProvider& provider,
                                 const LabelSpace& synthetic_space);

// Up to max_pairs key/answer pairs; each target is the entity whose text has
// the highest Jaccard overlap with the answer. Pairs scoring < 0.2 discarded.
Document generate_synthetic_inquiries(const Document& doc, AnnotationProvider& provider,
                                      int max_pairs);

// Greedy best-IoU match per gold entity, plus text overlap of matched pairs.
AnnotationQualityStats measure_annotation_quality(const std::vector<Document>& synthetic,
                                                  const std::vector<Document>& gold);

// Corrupts labeled (non-outside) tokens where a standard normal draw exceeds
// the threshold; expected corrupted fraction is 2*(1-Phi(lambda)). Mode
// "incorrect" swaps in a uniformly random different non-outside category,
// "incomplete" erases to the outside category.
std::vector<Document> corrupt_guidance_labels(std::vector<Document> docs,
                                              const LabelNoiseConfig& cfg,
                                              const LabelSpace& gold_space);

double corruption_probability(double lambda);

// tokens per gold category, indexed like the label space
std::vector<long long> gold_label_histogram(const std::vector<Document>& docs,
                                            const LabelSpace& gold_space);

}  // namespace david
