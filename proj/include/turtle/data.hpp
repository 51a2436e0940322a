#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "turtle/fit.hpp"
#include "turtle/types.hpp"

namespace turtle {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-column z-transform; columns with zero spread are left unscaled.
struct Standardizer {
  Vec mean;
  Vec sd;
  bool active = false;

  Mat apply(const Mat& X) const;
  Mat invert(const Mat& X) const;
};

Standardizer fit_standardizer(const Mat& X);

struct LabeledDataset {
  Mat X;
  std::vector<int> labels;     // primary labeling; empty when absent
  std::vector<int> alt_labels; // secondary convention where one exists
  std::string name;
  Standardizer standardizer;   // the transform applied to X, if any
};

// Seeded simulation generators (committed constants; see README).
LabeledDataset gen_gu6(uint64_t seed);      // 6 GU components, N=1150, D=2
LabeledDataset gen_cross(uint64_t seed);    // 2 crosses + 2 round, labels: 4-way / 6-way
LabeledDataset gen_mixg(uint64_t seed);     // 4 Gaussians, two close; labels: 3-way / 4-way
LabeledDataset gen_outlier(uint64_t seed);  // 3 Gaussians + 50 uniform noise points
LabeledDataset gen_fig1(uint64_t seed);     // larger-N close-pair fixture (BIC vs ICL)

LabeledDataset generate(const std::string& family, uint64_t seed);

// Comma-separated numeric data; optional label column; rows with missing or
// non-numeric features raise ParseError naming the line.
LabeledDataset load_csv(const std::string& path, bool has_header,
                        std::optional<int> label_column, bool standardize);

// True when the first line holds any token that does not parse as a number.
bool csv_has_header(const std::string& path);

void write_dataset_csv(const std::string& path, const LabeledDataset& ds);

// fit outputs, shared by the CLI and the acceptance suite
void write_labels_csv(const std::string& path, const std::vector<int>& labels);
void write_posteriors_csv(const std::string& path, const Mat& P);
void write_trace_csv(const std::string& path, const ObjectiveTrace& trace);
void write_model_json(const std::string& path, const FitResult& result,
                      const Standardizer& std_used);

} // namespace turtle
