#include "mixnet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mixnet/rng.hpp"

namespace mixnet {

using nlohmann::json;

namespace {

// Temp write + rename so readers never observe a half-written file.
void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

}  // namespace

int Schema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown column '" + name + "'");
}

void Schema::validate() const {
    std::set<std::string> seen;
    for (const auto& col : columns) {
        if (col.name.empty()) throw std::invalid_argument("schema: empty column name");
        if (!seen.insert(col.name).second) {
            throw std::invalid_argument("schema: duplicate column name '" + col.name + "'");
        }
        if (col.kind == ColumnKind::discrete && col.arity < 2) {
            throw std::invalid_argument("schema: discrete column '" + col.name +
                                        "' must have arity >= 2");
        }
    }
}

bool Schema::operator==(const Schema& other) const {
    if (columns.size() != other.columns.size()) return false;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& a = columns[i];
        const auto& b = other.columns[i];
        if (a.name != b.name || a.kind != b.kind) return false;
        if (a.kind == ColumnKind::discrete && a.arity != b.arity) return false;
    }
    return true;
}

Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file: " + path);
    json doc = json::parse(in);
    if (!doc.is_array()) throw std::runtime_error("schema file must be a JSON array");
    Schema schema;
    for (const auto& entry : doc) {
        Column col;
        col.name = entry.at("name").get<std::string>();
        const std::string kind = entry.at("kind").get<std::string>();
        if (kind == "continuous") {
            col.kind = ColumnKind::continuous;
        } else if (kind == "discrete") {
            col.kind = ColumnKind::discrete;
            col.arity = entry.at("arity").get<int>();
        } else {
            throw std::runtime_error("schema: unknown kind '" + kind + "'");
        }
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

void save_schema(const Schema& schema, const std::string& path) {
    json doc = json::array();
    for (const auto& col : schema.columns) {
        json entry;
        entry["name"] = col.name;
        entry["kind"] = col.kind == ColumnKind::discrete ? "discrete" : "continuous";
        if (col.kind == ColumnKind::discrete) entry["arity"] = col.arity;
        doc.push_back(std::move(entry));
    }
    write_text_atomic(path, doc.dump(2) + "\n");
}

Dataset::Dataset(Schema schema, std::vector<double> cells)
    : Dataset(std::move(schema), std::move(cells), {}) {}

Dataset::Dataset(Schema schema, std::vector<double> cells,
                 std::vector<std::vector<std::string>> symbols)
    : schema_(std::move(schema)), cells_(std::move(cells)), symbols_(std::move(symbols)) {
    schema_.validate();
    const std::size_t n = schema_.size();
    if (n == 0) {
        if (!cells_.empty()) throw std::invalid_argument("dataset: cells with empty schema");
        rows_ = 0;
    } else {
        if (cells_.size() % n != 0) {
            throw std::invalid_argument("dataset: cell count not a multiple of column count");
        }
        rows_ = cells_.size() / n;
    }
    if (symbols_.empty()) symbols_.resize(n);
    if (symbols_.size() != n) throw std::invalid_argument("dataset: symbol table size mismatch");
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double v = cells_[r * n + c];
            if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite cell");
            if (schema_.is_discrete(static_cast<int>(c))) {
                if (v != std::floor(v) || v < 0 || v >= schema_.arity(static_cast<int>(c))) {
                    throw std::invalid_argument("dataset: discrete cell out of arity range in column '" +
                                                schema_.columns[c].name + "'");
                }
            }
        }
    }
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& row_ids) const {
    const std::size_t n = cols();
    std::vector<double> out;
    out.reserve(row_ids.size() * n);
    for (std::size_t r : row_ids) {
        if (r >= rows_) throw std::invalid_argument("select_rows: row index out of range");
        out.insert(out.end(), cells_.begin() + r * n, cells_.begin() + (r + 1) * n);
    }
    return Dataset(schema_, std::move(out), symbols_);
}

int DiscretizationMap::bucket(int col, double x) const {
    const auto& c = cuts[col];
    // #{cuts < x}: a value equal to a cut point stays in the bucket below.
    return static_cast<int>(std::lower_bound(c.begin(), c.end(), x) - c.begin());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& token, std::size_t line_no, const std::string& col) {
    const std::string t = trim(token);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) {
        throw std::runtime_error("unparseable cell '" + token + "' in column '" + col +
                                 "' at line " + std::to_string(line_no));
    }
    return value;
}

}  // namespace

namespace {

Dataset load_impl(const std::string& path, const Schema& schema,
                  const std::vector<std::vector<std::string>>* fixed_symbols) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty data file: " + path);
    const auto header = split_csv_line(line);
    if (header.size() != schema.size()) {
        throw std::runtime_error("schema mismatch: header has " + std::to_string(header.size()) +
                                 " columns, schema declares " + std::to_string(schema.size()));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (trim(header[c]) != schema.columns[c].name) {
            throw std::runtime_error("schema mismatch: header column '" + trim(header[c]) +
                                     "' does not match schema column '" + schema.columns[c].name +
                                     "'");
        }
    }

    const std::size_t n = schema.size();
    std::vector<double> cells;
    std::vector<std::vector<std::string>> symbols(n);
    std::vector<std::unordered_map<std::string, int>> symbol_ids(n);
    if (fixed_symbols) {
        if (fixed_symbols->size() != n) {
            throw std::runtime_error("schema mismatch: model symbol tables do not fit the schema");
        }
        symbols = *fixed_symbols;
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t id = 0; id < symbols[c].size(); ++id) {
                symbol_ids[c].emplace(symbols[c][id], static_cast<int>(id));
            }
        }
    }

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        const auto fields = split_csv_line(line);
        if (fields.size() != n) {
            throw std::runtime_error("row arity mismatch at line " + std::to_string(line_no) +
                                     ": got " + std::to_string(fields.size()) + " cells, expected " +
                                     std::to_string(n));
        }
        for (std::size_t c = 0; c < n; ++c) {
            const Column& col = schema.columns[c];
            const std::string token = trim(fields[c]);
            if (token.empty()) {
                throw std::runtime_error("missing value in column '" + col.name + "' at line " +
                                         std::to_string(line_no));
            }
            if (col.kind == ColumnKind::continuous) {
                cells.push_back(parse_real(token, line_no, col.name));
            } else {
                auto& ids = symbol_ids[c];
                auto it = ids.find(token);
                int id;
                if (it == ids.end()) {
                    if (fixed_symbols) {
                        throw std::runtime_error("unknown symbol '" + token + "' in column '" +
                                                 col.name + "' at line " + std::to_string(line_no) +
                                                 " (not seen when the model was fitted)");
                    }
                    id = static_cast<int>(symbols[c].size());
                    if (id >= col.arity) {
                        throw std::runtime_error(
                            "column '" + col.name + "' declared arity " + std::to_string(col.arity) +
                            " but a " + std::to_string(id + 1) + "-th distinct symbol '" + token +
                            "' appears at line " + std::to_string(line_no));
                    }
                    symbols[c].push_back(token);
                    ids.emplace(token, id);
                } else {
                    id = it->second;
                }
                cells.push_back(static_cast<double>(id));
            }
        }
    }
    return Dataset(schema, std::move(cells), std::move(symbols));
}

}  // namespace

Dataset load_dataset(const std::string& path, const Schema& schema) {
    return load_impl(path, schema, nullptr);
}

Dataset load_dataset(const std::string& path, const Schema& schema,
                     const std::vector<std::vector<std::string>>& symbols) {
    return load_impl(path, schema, &symbols);
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    const std::size_t n = data.cols();
    for (std::size_t c = 0; c < n; ++c) {
        if (c) out << ',';
        out << data.schema().columns[c].name;
    }
    out << '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (c) out << ',';
            const double v = data.at(r, c);
            if (data.schema().is_discrete(static_cast<int>(c))) {
                const int id = static_cast<int>(v);
                const auto& table = data.symbols()[c];
                if (id < static_cast<int>(table.size())) {
                    out << table[id];
                } else {
                    out << id;
                }
            } else {
                out << v;
            }
        }
        out << '\n';
    }
    write_text_atomic(path, out.str());
}

std::pair<Dataset, ScalingTransform> preprocess_fit(const Dataset& data, const NoiseSpec& noise,
                                                    std::uint64_t seed) {
    if (noise.amplitude < 0) throw std::invalid_argument("preprocess: negative noise amplitude");
    const std::size_t n = data.cols();
    const std::size_t rows = data.rows();
    std::vector<double> cells(data.cells());
    ScalingTransform transform;
    transform.columns.resize(n);

    Rng rng(seed);
    for (std::size_t c = 0; c < n; ++c) {
        if (data.schema().is_discrete(static_cast<int>(c))) continue;
        Rng col_rng = rng.child(c);

        double amp = noise.amplitude;
        if (noise.fraction_of_range) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows; ++r) {
                lo = std::min(lo, data.at(r, c));
                hi = std::max(hi, data.at(r, c));
            }
            amp = noise.amplitude * (rows > 0 ? hi - lo : 0.0);
        }

        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            double& v = cells[r * n + c];
            if (amp > 0) v += col_rng.uniform(-amp / 2, amp / 2);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }

        auto& cs = transform.columns[c];
        if (rows == 0 || hi <= lo) {
            cs.constant = true;
            cs.offset = lo;
            cs.scale = 1.0;
            for (std::size_t r = 0; r < rows; ++r) cells[r * n + c] = 0.5;
        } else {
            cs.offset = lo;
            cs.scale = hi - lo;
            for (std::size_t r = 0; r < rows; ++r) {
                double& v = cells[r * n + c];
                v = (v - lo) / cs.scale;
            }
        }
    }
    return {Dataset(data.schema(), std::move(cells), data.symbols()), std::move(transform)};
}

Dataset preprocess(const Dataset& data, double noise_amplitude, std::uint64_t seed) {
    return preprocess_fit(data, NoiseSpec{noise_amplitude, false}, seed).first;
}

Dataset apply_scaling(const Dataset& data, const ScalingTransform& transform) {
    if (transform.columns.size() != data.cols()) {
        throw std::invalid_argument("apply_scaling: transform/schema width mismatch");
    }
    const std::size_t n = data.cols();
    std::vector<double> cells(data.cells());
    for (std::size_t c = 0; c < n; ++c) {
        if (data.schema().is_discrete(static_cast<int>(c))) continue;
        const auto& cs = transform.columns[c];
        for (std::size_t r = 0; r < data.rows(); ++r) {
            double& v = cells[r * n + c];
            v = cs.constant ? 0.5 : (v - cs.offset) / cs.scale;
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    return Dataset(data.schema(), std::move(cells), data.symbols());
}

std::pair<DiscretizationMap, Dataset> discretize_equal_frequency(const Dataset& data, int f) {
    if (f < 2) throw std::invalid_argument("discretize_equal_frequency: f must be >= 2");
    const std::size_t n = data.cols();
    const std::size_t rows = data.rows();
    if (rows == 0) throw std::invalid_argument("discretize_equal_frequency: empty dataset");

    DiscretizationMap map;
    map.cuts.resize(n);
    Schema out_schema = data.schema();
    for (std::size_t c = 0; c < n; ++c) {
        if (data.schema().is_discrete(static_cast<int>(c))) continue;
        std::vector<double> sorted(rows);
        for (std::size_t r = 0; r < rows; ++r) sorted[r] = data.at(r, c);
        std::sort(sorted.begin(), sorted.end());

        std::vector<double> cuts;
        for (int j = 1; j < f; ++j) {
            // 1-based rank ceil(j*R/f); quantile is that order statistic.
            std::size_t rank =
                (static_cast<std::size_t>(j) * rows + static_cast<std::size_t>(f) - 1) /
                static_cast<std::size_t>(f);
            double q = sorted[rank - 1];
            // Duplicate quantiles collapse; a cut at (or above) the column max
            // would leave the top bucket empty.
            if (q < sorted.back() && (cuts.empty() || q > cuts.back())) cuts.push_back(q);
        }
        map.cuts[c] = std::move(cuts);
        out_schema.columns[c].kind = ColumnKind::discrete;
        out_schema.columns[c].arity =
            std::max(2, static_cast<int>(map.cuts[c].size()) + 1);
    }

    std::vector<double> cells(data.cells());
    for (std::size_t c = 0; c < n; ++c) {
        if (data.schema().is_discrete(static_cast<int>(c))) continue;
        for (std::size_t r = 0; r < rows; ++r) {
            cells[r * n + c] = static_cast<double>(map.bucket(static_cast<int>(c), data.at(r, c)));
        }
    }
    return {std::move(map), Dataset(std::move(out_schema), std::move(cells), data.symbols())};
}

Dataset apply_discretization(const Dataset& data, const DiscretizationMap& map) {
    if (map.cuts.size() != data.cols()) {
        throw std::invalid_argument("apply_discretization: map/schema width mismatch");
    }
    const std::size_t n = data.cols();
    Schema out_schema = data.schema();
    std::vector<double> cells(data.cells());
    for (std::size_t c = 0; c < n; ++c) {
        if (data.schema().is_discrete(static_cast<int>(c))) continue;
        out_schema.columns[c].kind = ColumnKind::discrete;
        out_schema.columns[c].arity = std::max(2, map.bucket_count(static_cast<int>(c)));
        for (std::size_t r = 0; r < data.rows(); ++r) {
            cells[r * n + c] = static_cast<double>(map.bucket(static_cast<int>(c), data.at(r, c)));
        }
    }
    return Dataset(std::move(out_schema), std::move(cells), data.symbols());
}

std::vector<CvSplit> cv_splits(const Dataset& data, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cv_splits: folds must be >= 2");
    const std::size_t rows = data.rows();
    if (rows < static_cast<std::size_t>(folds)) {
        throw std::invalid_argument("cv_splits: fewer rows than folds");
    }

    std::vector<std::size_t> perm(rows);
    for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
    Rng rng(seed);
    for (std::size_t i = rows; i > 1; --i) {
        std::size_t j = rng.index(i);
        std::swap(perm[i - 1], perm[j]);
    }

    const std::size_t base = rows / folds;
    const std::size_t extra = rows % folds;
    std::vector<CvSplit> splits;
    splits.reserve(folds);
    std::size_t start = 0;
    for (int fold = 0; fold < folds; ++fold) {
        const std::size_t size = base + (static_cast<std::size_t>(fold) < extra ? 1 : 0);
        std::vector<std::size_t> test_ids(perm.begin() + start, perm.begin() + start + size);
        std::vector<std::size_t> train_ids;
        train_ids.reserve(rows - size);
        train_ids.insert(train_ids.end(), perm.begin(), perm.begin() + start);
        train_ids.insert(train_ids.end(), perm.begin() + start + size, perm.end());
        std::sort(test_ids.begin(), test_ids.end());
        std::sort(train_ids.begin(), train_ids.end());
        splits.push_back({data.select_rows(train_ids), data.select_rows(test_ids)});
        start += size;
    }
    return splits;
}

Dataset subsample(const Dataset& data, std::size_t cap, std::uint64_t seed) {
    if (cap < 1) throw std::invalid_argument("subsample: cap must be >= 1");
    if (data.rows() <= cap) return data;
    Rng rng(seed);
    return data.select_rows(rng.sample_without_replacement(data.rows(), cap));
}

}  // namespace mixnet
