#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mixnet {

enum class ColumnKind { continuous, discrete };

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    int arity = 0;  // discrete columns only, >= 2
};

// Ordered column declarations for a mixed continuous/discrete table.
struct Schema {
    std::vector<Column> columns;

    std::size_t size() const { return columns.size(); }
    // Index of a named column; throws if unknown.
    int index_of(const std::string& name) const;
    bool is_discrete(int col) const { return columns[col].kind == ColumnKind::discrete; }
    int arity(int col) const { return columns[col].arity; }

    // Enforces unique non-empty names and discrete arity >= 2.
    void validate() const;

    bool operator==(const Schema& other) const;
};

// Parses the schema JSON file: an array of
// {"name": string, "kind": "continuous"|"discrete", "arity": int}.
Schema load_schema(const std::string& path);
void save_schema(const Schema& schema, const std::string& path);

// Rows of mixed values. Continuous cells are reals; discrete cells hold the
// dense symbol index in [0, arity). Values are immutable after construction.
class Dataset {
public:
    Dataset() = default;
    Dataset(Schema schema, std::vector<double> cells);
    Dataset(Schema schema, std::vector<double> cells,
            std::vector<std::vector<std::string>> symbols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return schema_.size(); }
    const Schema& schema() const { return schema_; }

    double at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
    std::span<const double> row(std::size_t r) const {
        return {cells_.data() + r * cols(), cols()};
    }
    const std::vector<double>& cells() const { return cells_; }

    // Per-column symbol tables for discrete columns (dense index -> token, in
    // first-appearance order). Empty for continuous columns and for datasets
    // not built from a file.
    const std::vector<std::vector<std::string>>& symbols() const { return symbols_; }

    Dataset select_rows(const std::vector<std::size_t>& row_ids) const;

private:
    Schema schema_;
    std::size_t rows_ = 0;
    std::vector<double> cells_;
    std::vector<std::vector<std::string>> symbols_;
};

// Per continuous column: sorted interior cut points (empirical quantiles)
// defining equal-frequency buckets. A value x falls into bucket
// #{cuts < x}; ties with a cut point map to the bucket below it.
struct DiscretizationMap {
    std::vector<std::vector<double>> cuts;  // per column; empty for discrete columns

    int bucket(int col, double x) const;
    int bucket_count(int col) const { return static_cast<int>(cuts[col].size()) + 1; }
};

// Per-column affine map fitted by preprocess; applied to held-out data so
// scaling statistics never come from the test fold.
struct ScalingTransform {
    struct ColumnScale {
        double offset = 0.0;  // post-noise column minimum
        double scale = 1.0;   // post-noise column range
        bool constant = false;
    };
    std::vector<ColumnScale> columns;  // one per schema column; identity for discrete
};

// Uniform jitter applied before scaling. When fraction_of_range is set the
// amplitude is taken per column as amplitude * (raw max - raw min).
struct NoiseSpec {
    double amplitude = 0.0;
    bool fraction_of_range = false;
};

// Loads a CSV (header row, '.' decimal separator) against the schema. Discrete
// tokens are mapped to dense indices in first-appearance order.
Dataset load_dataset(const std::string& path, const Schema& schema);

// Same, but discrete tokens resolve through the given symbol tables (one per
// column, as stored with a saved model). Tokens outside the tables are errors.
Dataset load_dataset(const std::string& path, const Schema& schema,
                     const std::vector<std::vector<std::string>>& symbols);

void save_csv(const Dataset& data, const std::string& path);

// Adds per-cell uniform noise on [-amplitude/2, +amplitude/2] to continuous
// columns, then rescales each so its post-noise min maps to 0 and max to 1.
// Constant columns map to 0.5. Returns the fitted transform for reuse.
std::pair<Dataset, ScalingTransform> preprocess_fit(const Dataset& data, const NoiseSpec& noise,
                                                    std::uint64_t seed);
Dataset preprocess(const Dataset& data, double noise_amplitude, std::uint64_t seed);

// Applies a fitted transform; continuous values are clamped into [0, 1].
Dataset apply_scaling(const Dataset& data, const ScalingTransform& transform);

// Equal-frequency discretization into at most f buckets per continuous column.
// Cut points are the empirical quantiles at ranks ceil(j*R/f), j = 1..f-1,
// deduplicated; cuts that would leave the top bucket empty are dropped.
// Returns the map and a fully discrete dataset.
std::pair<DiscretizationMap, Dataset> discretize_equal_frequency(const Dataset& data, int f);

// Re-buckets a dataset through an existing map (same schema as the map's source).
Dataset apply_discretization(const Dataset& data, const DiscretizationMap& map);

struct CvSplit {
    Dataset train;
    Dataset test;
};

// Seeded permutation split into `folds` contiguous blocks; block i is fold i's
// test set. Test sets are disjoint and cover the dataset.
std::vector<CvSplit> cv_splits(const Dataset& data, int folds, std::uint64_t seed);

// Identity when rows <= cap, otherwise a seeded uniform sample without
// replacement of cap rows (original row order preserved).
Dataset subsample(const Dataset& data, std::size_t cap, std::uint64_t seed);

}  // namespace mixnet
