#include "rflnn/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rflnn/random.hpp"

namespace rflnn {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t offset, const std::string& file) {
    if (offset + 4 > b.size())
        throw ParseError(file + ": truncated header", static_cast<std::int64_t>(b.size()));
    return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
           (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

bool parse_number(const std::string& s, double& v) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool numeric_less(const std::string& a, const std::string& b) {
    double x = 0, y = 0;
    const bool na = parse_number(a, x), nb = parse_number(b, y);
    if (na && nb) return x < y;
    if (na != nb) return na;
    return a < b;
}

} // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path, Index classes,
                 Index limit) {
    if (classes < 1) throw UsageError("load_idx: classes must be >= 1");
    const auto img = read_bytes(images_path);
    const auto lab = read_bytes(labels_path);
    const std::string iname = images_path.filename().string();
    const std::string lname = labels_path.filename().string();

    if (read_be32(img, 0, iname) != kIdxImages) throw ParseError(iname + ": bad magic for an IDX image file", 0);
    if (read_be32(lab, 0, lname) != kIdxLabels) throw ParseError(lname + ": bad magic for an IDX label file", 0);
    const std::uint32_t n = read_be32(img, 4, iname);
    const std::uint32_t rows = read_be32(img, 8, iname);
    const std::uint32_t cols = read_be32(img, 12, iname);
    const std::uint32_t n_labels = read_be32(lab, 4, lname);
    if (n != n_labels)
        throw ParseError(lname + ": label count " + std::to_string(n_labels) + " does not match image count " +
                             std::to_string(n),
                         4);
    if (rows == 0 || cols == 0) throw ParseError(iname + ": zero image dimension", 8);

    const std::size_t pixels = std::size_t{rows} * cols;
    const std::size_t need_img = 16 + std::size_t{n} * pixels;
    if (img.size() < need_img) throw ParseError(iname + ": truncated pixel data", static_cast<std::int64_t>(img.size()));
    if (lab.size() < 8 + std::size_t{n}) throw ParseError(lname + ": truncated label data", static_cast<std::int64_t>(lab.size()));
    if (img.size() > need_img) throw ParseError(iname + ": trailing bytes after pixel data", static_cast<std::int64_t>(need_img));
    if (lab.size() > 8 + std::size_t{n})
        throw ParseError(lname + ": trailing bytes after label data", static_cast<std::int64_t>(8 + n));

    const Index count = limit > 0 ? std::min<Index>(limit, n) : static_cast<Index>(n);
    if (count < 1) throw ParseError(iname + ": no samples", 4);
    Dataset d;
    d.X.resize(count, static_cast<Index>(pixels));
    d.Y = Matrix::Zero(count, classes);
    for (Index i = 0; i < count; ++i) {
        const std::size_t base = 16 + static_cast<std::size_t>(i) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) d.X(i, static_cast<Index>(p)) = img[base + p] / 255.0;
        const std::uint8_t label = lab[8 + static_cast<std::size_t>(i)];
        if (label >= classes)
            throw ParseError(lname + ": label " + std::to_string(label) + " out of range",
                             static_cast<std::int64_t>(8 + i));
        d.Y(i, label) = 1.0;
    }
    return d;
}

void write_idx_images(const std::filesystem::path& path, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels) {
    const std::size_t per = std::size_t{rows} * cols;
    if (per == 0 || pixels.size() % per != 0) throw UsageError("write_idx_images: pixel count is not a multiple of rows*cols");
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxImages);
    put_be32(out, static_cast<std::uint32_t>(pixels.size() / per));
    put_be32(out, rows);
    put_be32(out, cols);
    out.insert(out.end(), pixels.begin(), pixels.end());
    write_bytes(path, out);
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> out;
    put_be32(out, kIdxLabels);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    write_bytes(path, out);
}

CsvDataset parse_csv(const std::string& text, const std::string& label_column, const CsvOptions& options) {
    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    std::vector<std::string> header;
    while (header.empty() && std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        header = split_fields(line);
    }
    if (header.empty()) throw ParseError("csv: missing header row", line_no);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) throw UsageError("csv: no column named '" + label_column + "'");
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    CsvDataset out;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) out.feature_names.push_back(header[c]);
    if (out.feature_names.empty()) throw ParseError("csv: no feature columns", 1);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(header.size()),
                             line_no);
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == label_idx) continue;
            double v = 0;
            if (!parse_number(fields[c], v) || !std::isfinite(v))
                throw ParseError("csv: line " + std::to_string(line_no) + ", column '" + header[c] +
                                     "': not a finite number: '" + fields[c] + "'",
                                 line_no);
            row.push_back(v);
        }
        if (options.label_kind == LabelKind::numeric) {
            double v = 0;
            if (!parse_number(fields[label_idx], v) || !std::isfinite(v))
                throw ParseError("csv: line " + std::to_string(line_no) + ": label is not a finite number", line_no);
        }
        rows.push_back(std::move(row));
        labels.push_back(fields[label_idx]);
    }
    if (rows.empty()) throw ParseError("csv: no data rows", line_no);

    const auto n = static_cast<Index>(rows.size());
    const auto d = static_cast<Index>(out.feature_names.size());
    out.data.X.resize(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) out.data.X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

    if (options.label_kind == LabelKind::numeric) {
        out.data.Y.resize(n, 1);
        for (Index i = 0; i < n; ++i) parse_number(labels[static_cast<std::size_t>(i)], out.data.Y(i, 0));
    } else {
        out.classes = labels;
        std::sort(out.classes.begin(), out.classes.end(), numeric_less);
        out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());
        std::map<std::string, Index> column;
        for (std::size_t k = 0; k < out.classes.size(); ++k) column[out.classes[k]] = static_cast<Index>(k);
        out.data.Y = Matrix::Zero(n, static_cast<Index>(out.classes.size()));
        for (Index i = 0; i < n; ++i) out.data.Y(i, column[labels[static_cast<std::size_t>(i)]]) = 1.0;
    }
    if (options.normalization != Normalization::none)
        out.data.X = Normalizer::fit(out.data.X, options.normalization).apply(out.data.X);
    return out;
}

CsvDataset load_csv(const std::filesystem::path& path, const std::string& label_column, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), label_column, options);
}

std::string to_csv(const Dataset& data, CsvLabels labels) {
    data.validate();
    std::ostringstream os;
    for (Index j = 0; j < data.input_dim(); ++j) os << 'x' << j << ',';
    if (labels == CsvLabels::class_index) {
        os << "label\n";
    } else {
        for (Index k = 0; k < data.output_dim(); ++k) os << 'y' << k << (k + 1 < data.output_dim() ? "," : "\n");
    }
    const auto cls = argmax_rows(data.Y);
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.input_dim(); ++j) os << format_real(data.X(i, j)) << ',';
        if (labels == CsvLabels::class_index) {
            os << cls(i) << '\n';
        } else {
            for (Index k = 0; k < data.output_dim(); ++k)
                os << format_real(data.Y(i, k)) << (k + 1 < data.output_dim() ? "," : "\n");
        }
    }
    return os.str();
}

void write_csv(const Dataset& data, const std::filesystem::path& path, CsvLabels labels) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_csv(data, labels);
}

Dataset gen_sinc(Index n, double lo, double hi) {
    if (n < 2) throw ConfigError("gen_sinc: need at least two samples");
    if (!(hi > lo)) throw ConfigError("gen_sinc: empty domain");
    Dataset d;
    d.X = Vector::LinSpaced(n, lo, hi);
    // A symmetric window with an odd count has its midpoint at 0; pin it exactly.
    if (lo == -hi && n % 2 == 1) d.X((n - 1) / 2, 0) = 0.0;
    d.Y.resize(n, 1);
    for (Index i = 0; i < n; ++i) {
        const double x = d.X(i, 0);
        d.Y(i, 0) = x == 0.0 ? 1.0 : std::sin(x) / x;
    }
    return d;
}

Dataset gen_sine_mix(Index n, double lo, double hi, const std::vector<double>& frequencies) {
    if (n < 2) throw ConfigError("gen_sine_mix: need at least two samples");
    if (!(hi > lo)) throw ConfigError("gen_sine_mix: empty domain");
    if (frequencies.empty()) throw ConfigError("gen_sine_mix: needs at least one frequency");
    Dataset d;
    d.X = Vector::LinSpaced(n, lo, hi);
    d.Y = Matrix::Zero(n, 1);
    for (double f : frequencies) d.Y.col(0).array() += (f * d.X.col(0).array()).sin();
    return d;
}

Dataset rescale_inputs(Dataset data, double lo, double hi) {
    if (data.X.cols() != 1) throw UsageError("rescale_inputs: expects a single input column");
    const double a = data.X.minCoeff(), b = data.X.maxCoeff();
    if (!(b > a)) throw DegenerateInputError("rescale_inputs: inputs have zero spread");
    data.X = ((data.X.array() - a) / (b - a) * (hi - lo) + lo).matrix();
    return data;
}

Normalizer Normalizer::fit(const Matrix& X, Normalization kind) {
    Normalizer n;
    n.kind = kind;
    n.offset = RowVector::Zero(X.cols());
    n.scale = RowVector::Ones(X.cols());
    if (kind == Normalization::none || X.rows() == 0) return n;
    for (Index j = 0; j < X.cols(); ++j) {
        const auto col = X.col(j).array();
        double off = 0, sc = 1;
        if (kind == Normalization::minmax) {
            off = col.minCoeff();
            sc = col.maxCoeff() - off;
        } else {
            off = col.mean();
            sc = std::sqrt((col - off).square().sum() / static_cast<double>(X.rows()));
        }
        n.offset(j) = off;
        n.scale(j) = sc > 0 ? sc : 1.0;  // constant columns map to 0
    }
    return n;
}

Matrix Normalizer::apply(const Matrix& X) const {
    if (kind == Normalization::none) return X;
    if (X.cols() != offset.size()) throw UsageError("normalizer: column count mismatch");
    return ((X.rowwise() - offset).array().rowwise() / scale.array()).matrix();
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    data.validate();
    if (!(train_fraction > 0) || train_fraction > 1) throw ConfigError("split: train fraction must be in (0, 1]");
    if (train_fraction == 1) return {data, data};
    const Index n = data.size();
    const auto n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n) throw ConfigError("split: each side needs at least one sample");

    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    Rng rng(derive_seed(seed, 0x5917));
    for (Index i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);

    auto take = [&](Index from, Index count) {
        Dataset d;
        d.X.resize(count, data.input_dim());
        d.Y.resize(count, data.output_dim());
        for (Index i = 0; i < count; ++i) {
            d.X.row(i) = data.X.row(perm[static_cast<std::size_t>(from + i)]);
            d.Y.row(i) = data.Y.row(perm[static_cast<std::size_t>(from + i)]);
        }
        return d;
    };
    return {take(0, n_train), take(n_train, n - n_train)};
}

std::string_view to_string(DatasetSource::Kind kind) {
    switch (kind) {
    case DatasetSource::Kind::idx_pair: return "idx_pair";
    case DatasetSource::Kind::csv: return "csv";
    case DatasetSource::Kind::synthetic_sinc: return "synthetic_sinc";
    case DatasetSource::Kind::synthetic_sine_mix: return "synthetic_sine_mix";
    }
    return "synthetic_sinc";
}

DatasetSource::Kind parse_source_kind(std::string_view name) {
    if (name == "idx_pair") return DatasetSource::Kind::idx_pair;
    if (name == "csv") return DatasetSource::Kind::csv;
    if (name == "synthetic_sinc") return DatasetSource::Kind::synthetic_sinc;
    if (name == "synthetic_sine_mix") return DatasetSource::Kind::synthetic_sine_mix;
    throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

std::string_view to_string(Normalization kind) {
    switch (kind) {
    case Normalization::none: return "none";
    case Normalization::minmax: return "minmax";
    case Normalization::zscore: return "zscore";
    }
    return "none";
}

Normalization parse_normalization(std::string_view name) {
    if (name == "none") return Normalization::none;
    if (name == "minmax") return Normalization::minmax;
    if (name == "zscore") return Normalization::zscore;
    throw ConfigError("unknown normalization '" + std::string(name) + "'");
}

void DatasetSource::validate() const {
    if (!(split > 0) || split > 1) throw ConfigError("dataset.split must be in (0, 1]");
    switch (kind) {
    case Kind::idx_pair:
        if (images.empty() || labels.empty()) throw ConfigError("dataset.images and dataset.labels are required");
        if (!std::filesystem::exists(images)) throw ConfigError("dataset.images: no such file " + images.string());
        if (!std::filesystem::exists(labels)) throw ConfigError("dataset.labels: no such file " + labels.string());
        if (limit < 0) throw ConfigError("dataset.limit must be >= 0");
        break;
    case Kind::csv:
        if (csv.empty()) throw ConfigError("dataset.path is required for csv");
        if (!std::filesystem::exists(csv)) throw ConfigError("dataset.path: no such file " + csv.string());
        break;
    case Kind::synthetic_sinc:
    case Kind::synthetic_sine_mix:
        if (samples < 2) throw ConfigError("dataset.samples must be >= 2");
        if (!(hi > lo)) throw ConfigError("dataset.domain must satisfy lo < hi");
        if (kind == Kind::synthetic_sine_mix && frequencies.empty())
            throw ConfigError("dataset.frequencies must not be empty");
        break;
    }
}

Split load_source(const DatasetSource& source) {
    source.validate();
    Dataset all;
    switch (source.kind) {
    case DatasetSource::Kind::idx_pair: all = load_idx(source.images, source.labels, 10, source.limit); break;
    case DatasetSource::Kind::csv: all = load_csv(source.csv, source.label_column, {source.label_kind}).data; break;
    case DatasetSource::Kind::synthetic_sinc: all = gen_sinc(source.samples, source.lo, source.hi); break;
    case DatasetSource::Kind::synthetic_sine_mix:
        all = gen_sine_mix(source.samples, source.lo, source.hi, source.frequencies);
        break;
    }
    Split s = split(all, source.split, source.split_seed);
    if (source.normalization != Normalization::none) {
        const Normalizer norm = Normalizer::fit(s.train.X, source.normalization);
        s.train.X = norm.apply(s.train.X);
        s.test.X = norm.apply(s.test.X);
    }
    return s;
}

std::vector<std::string> known_datasets() { return {"mnist", "sinc", "sine-mix"}; }

std::string dataset_manifest(const std::string& name) {
    using nlohmann::json;
    json j;
    if (name == "mnist") {
        auto file = [](const char* fname, const char* role, std::uint32_t magic, std::vector<std::uint32_t> dims,
                       std::uint64_t bytes) {
            return json{{"name", fname}, {"role", role}, {"magic", magic}, {"dims", dims}, {"bytes", bytes}};
        };
        j = {{"name", "mnist"},
             {"kind", "idx_pair"},
             {"classes", 10},
             {"pixel_scale", "value / 255"},
             {"mirror", "https://storage.googleapis.com/cvdf-datasets/mnist/"},
             {"note", "files are gzip-compressed at the mirror; decompress before use"},
             {"files",
              json::array({file("train-images-idx3-ubyte", "train_images", 0x803, {60000, 28, 28}, 47040016),
                           file("train-labels-idx1-ubyte", "train_labels", 0x801, {60000}, 60008),
                           file("t10k-images-idx3-ubyte", "test_images", 0x803, {10000, 28, 28}, 7840016),
                           file("t10k-labels-idx1-ubyte", "test_labels", 0x801, {10000}, 10008)})}};
    } else if (name == "sinc") {
        j = {{"name", "sinc"},
             {"kind", "synthetic_sinc"},
             {"samples", 201},
             {"domain", {-5 * kPi, 5 * kPi}},
             {"target", "sin(x)/x with value 1 at x = 0"}};
    } else if (name == "sine-mix") {
        j = {{"name", "sine-mix"},
             {"kind", "synthetic_sine_mix"},
             {"samples", 400},
             {"domain", {-kPi, kPi}},
             {"frequencies", {1.0, 8.0}},
             {"target", "sum of sin(f x)"}};
    } else {
        throw ConfigError("unknown dataset '" + name + "'");
    }
    return j.dump(2);
}

} // namespace rflnn
