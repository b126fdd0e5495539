#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rflnn/common.hpp"
#include "rflnn/networks.hpp"

namespace rflnn {

// ---- IDX -------------------------------------------------------------------

/// Images from an IDX3 ubyte file and labels from an IDX1 ubyte file.
/// Pixels are scaled to [0, 1]; labels become one-hot rows over `classes`.
/// `limit` > 0 keeps only the first `limit` samples.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Index classes = 10, Index limit = 0);

void write_idx_images(const std::filesystem::path& path, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

// ---- CSV -------------------------------------------------------------------

enum class LabelKind {
    categorical,  // one-hot over the distinct values, in sorted order
    numeric,      // the column itself becomes the single target
};

enum class Normalization { none, minmax, zscore };

struct CsvOptions {
    LabelKind label_kind = LabelKind::categorical;
    Normalization normalization = Normalization::none;
};

struct CsvDataset {
    Dataset data;
    std::vector<std::string> feature_names;
    std::vector<std::string> classes;  // categorical labels, in one-hot column order
};

/// Rectangular numeric CSV with a header row.
CsvDataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                    const CsvOptions& options = {});
CsvDataset parse_csv(const std::string& text, const std::string& label_column, const CsvOptions& options = {});

enum class CsvLabels {
    class_index,  // one "label" column holding argmax of each Y row
    targets,      // columns y0..y{K-1}
};

std::string to_csv(const Dataset& data, CsvLabels labels = CsvLabels::class_index);
void write_csv(const Dataset& data, const std::filesystem::path& path, CsvLabels labels = CsvLabels::class_index);

// ---- synthetic data ----------------------------------------------------------

/// n uniform samples of sin(x)/x on [lo, hi], with the value 1 at x = 0.
Dataset gen_sinc(Index n, double lo, double hi);
/// n uniform samples of sum_f sin(f x) on [lo, hi].
Dataset gen_sine_mix(Index n, double lo, double hi, const std::vector<double>& frequencies);

/// Maps the single input column of a 1-D dataset affinely onto [lo, hi].
Dataset rescale_inputs(Dataset data, double lo, double hi);

// ---- preprocessing ----------------------------------------------------------

struct Normalizer {
    Normalization kind = Normalization::none;
    RowVector offset;
    RowVector scale;

    static Normalizer fit(const Matrix& X, Normalization kind);
    Matrix apply(const Matrix& X) const;
};

struct Split {
    Dataset train;
    Dataset test;
};

/// Seeded shuffle, then the first round(fraction * N) rows go to train.
/// fraction = 1 returns the whole set as both train and test.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed);

// ---- sources and manifests ----------------------------------------------------

struct DatasetSource {
    enum class Kind { idx_pair, csv, synthetic_sinc, synthetic_sine_mix };

    Kind kind = Kind::synthetic_sinc;
    std::filesystem::path images;  // idx_pair
    std::filesystem::path labels;  // idx_pair
    std::filesystem::path csv;     // csv
    std::string label_column = "label";
    LabelKind label_kind = LabelKind::categorical;
    Index samples = 201;           // synthetic
    double lo = -5 * kPi;
    double hi = 5 * kPi;
    std::vector<double> frequencies{1.0, 8.0};
    Index limit = 0;               // idx_pair: keep the first `limit` samples
    double split = 0.8;
    std::uint64_t split_seed = 0;
    Normalization normalization = Normalization::none;

    void validate() const;
};

std::string_view to_string(DatasetSource::Kind kind);
DatasetSource::Kind parse_source_kind(std::string_view name);
std::string_view to_string(Normalization kind);
Normalization parse_normalization(std::string_view name);

/// Loads, splits and normalizes (statistics from the train side only).
Split load_source(const DatasetSource& source);

/// JSON manifest describing a named dataset: format, expected files and
/// their provenance. Known names: mnist, sinc, sine-mix.
std::string dataset_manifest(const std::string& name);
std::vector<std::string> known_datasets();

} // namespace rflnn
