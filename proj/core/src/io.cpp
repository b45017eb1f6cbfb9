#include "stm/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace stm {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    return out;
}

std::string where(const fs::path& path, std::size_t offset) {
    return path.string() + " @ byte " + std::to_string(offset);
}

// Sequential reader over a byte buffer; every read is bounds-checked.
class ByteReader {
public:
    ByteReader(std::vector<std::uint8_t> bytes, fs::path path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const fs::path& path() const noexcept { return path_; }

    void need(std::size_t n) const {
        if (remaining() < n) throw FormatError(where(path_, pos_) + ": truncated file");
    }

    std::uint32_t u32_be() {
        need(4);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v = (v << 8) | bytes_[pos_++];
        return v;
    }

    template <typename T>
    T le() {
        need(sizeof(T));
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), sizeof(T), raw.begin());
        pos_ += sizeof(T);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        std::span<const std::uint8_t> s(bytes_.data() + pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::vector<std::uint8_t> bytes_;
    fs::path path_;
    std::size_t pos_ = 0;
};

class ByteWriter {
public:
    template <typename T>
    void le(T value) {
        auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        buf_.insert(buf_.end(), raw.begin(), raw.end());
    }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view text, double& out) {
    const auto s = trim(text);
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

// RFC 4180 record splitting for one physical line (quoted newlines are not supported).
std::vector<std::string> split_csv_line(const std::string& line, const std::string& where_msg) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw FormatError(where_msg + ": unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

PgmImage parse_pgm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&]() -> std::size_t {
        skip_space_and_comments();
        std::size_t v = 0;
        const auto start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        if (pos == start) throw FormatError(where(path, start) + ": expected a number in PGM header");
        return v;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw FormatError(where(path, 0) + ": not a binary PGM (P5)");
    }
    pos = 2;
    PgmImage img;
    img.width = number();
    img.height = number();
    const auto maxval = number();
    if (maxval == 0 || maxval > 255) {
        throw FormatError(where(path, pos) + ": only 8-bit PGM (maxval <= 255) is supported");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw FormatError(where(path, pos) + ": malformed PGM header");
    }
    ++pos;
    const auto n = img.width * img.height;
    if (bytes.size() - pos < n) throw FormatError(where(path, pos) + ": truncated PGM pixel data");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    if (maxval != 255) {
        for (auto& p : img.pixels) {
            p = static_cast<std::uint8_t>(std::lround(255.0 * std::min<double>(p, maxval) / maxval));
        }
    }
    return img;
}

}  // namespace

// --- IDX --------------------------------------------------------------------

Dataset load_idx(const fs::path& images, const std::optional<fs::path>& labels) {
    ByteReader img(read_file(images), images);
    const auto magic = img.u32_be();
    if (magic != kIdxImageMagic) {
        std::ostringstream msg;
        msg << where(images, 0) << ": bad IDX image magic 0x" << std::hex << std::setw(8)
            << std::setfill('0') << magic << " (expected 0x00000803)";
        throw FormatError(msg.str());
    }
    const std::size_t n = img.u32_be();
    const std::size_t rows = img.u32_be();
    const std::size_t cols = img.u32_be();
    const std::size_t m = rows * cols;
    if (m == 0) throw FormatError(where(images, 8) + ": zero-sized images");
    if (img.remaining() < n * m) {
        throw FormatError(where(images, img.offset()) + ": truncated file (expected " +
                          std::to_string(n * m) + " pixel bytes, found " +
                          std::to_string(img.remaining()) + ")");
    }
    const auto pixels = img.bytes(n * m);
    std::vector<double> values(n * m);
    std::transform(pixels.begin(), pixels.end(), values.begin(),
                   [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });

    std::optional<std::vector<Label>> label_strings;
    if (labels) {
        ByteReader lab(read_file(*labels), *labels);
        const auto lmagic = lab.u32_be();
        if (lmagic != kIdxLabelMagic) {
            std::ostringstream msg;
            msg << where(*labels, 0) << ": bad IDX label magic 0x" << std::hex << std::setw(8)
                << std::setfill('0') << lmagic << " (expected 0x00000801)";
            throw FormatError(msg.str());
        }
        const std::size_t ln = lab.u32_be();
        if (ln != n) {
            throw FormatError(labels->string() + ": label count " + std::to_string(ln) +
                              " does not match image count " + std::to_string(n));
        }
        const auto raw = lab.bytes(ln);
        label_strings.emplace();
        label_strings->reserve(ln);
        for (auto b : raw) label_strings->push_back(std::to_string(b));
    }
    return Dataset(Matrix(n, m, std::move(values)), std::move(label_strings));
}

// --- CSV --------------------------------------------------------------------

Dataset load_csv(const fs::path& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");

    std::string line;
    std::size_t line_no = 0;
    auto loc = [&] { return path.string() + ":" + std::to_string(line_no); };

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_csv_line(line, loc());
            break;
        }
    }
    if (header.empty()) throw FormatError(path.string() + ": missing header row");
    for (auto& h : header) h = trim(h);

    std::optional<std::size_t> label_idx;
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end()) {
            throw ConfigError(path.string() + ": label column '" + *label_column + "' not found");
        }
        label_idx = static_cast<std::size_t>(it - header.begin());
    }
    const std::size_t m = header.size() - (label_idx ? 1 : 0);
    if (m == 0) throw FormatError(path.string() + ": no numeric columns");

    std::vector<double> values;
    std::vector<Label> labels;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line, loc());
        if (fields.size() != header.size()) {
            throw FormatError(loc() + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (label_idx && c == *label_idx) {
                labels.push_back(trim(fields[c]));
                continue;
            }
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw FormatError(loc() + ", column '" + header[c] + "': not a finite number: '" +
                                  fields[c] + "'");
            }
            values.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw FormatError(path.string() + ": no data rows");

    std::optional<std::vector<Label>> lab;
    if (label_idx) lab = std::move(labels);
    return Dataset(Matrix(n, m, std::move(values)), std::move(lab));
}

// --- PGM --------------------------------------------------------------------

PgmImage read_pgm(const fs::path& path) { return parse_pgm(read_file(path), path); }

void write_pgm(const PgmImage& image, const fs::path& path) {
    if (image.pixels.size() != image.width * image.height) {
        throw DomainError("write_pgm: pixel count does not match dimensions");
    }
    auto out = open_output(path);
    out << "P5\n";
    if (!image.comment.empty()) out << "# " << image.comment << "\n";
    out << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

Dataset load_pgm_directory(const fs::path& dir, bool labels_from_names) {
    if (!fs::is_directory(dir)) throw FormatError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw FormatError(dir.string() + ": no .pgm files");

    std::vector<double> values;
    std::vector<Label> labels;
    std::size_t width = 0, height = 0;
    for (const auto& f : files) {
        const auto img = read_pgm(f);
        if (values.empty()) {
            width = img.width;
            height = img.height;
        } else if (img.width != width || img.height != height) {
            throw FormatError(f.string() + ": image size differs from the first image");
        }
        for (auto p : img.pixels) values.push_back(static_cast<double>(p) / 255.0);
        if (labels_from_names) {
            const auto stem = f.stem().string();
            labels.push_back(stem.substr(0, stem.find('_')));
        }
    }
    std::optional<std::vector<Label>> lab;
    if (labels_from_names) lab = std::move(labels);
    return Dataset(Matrix(files.size(), width * height, std::move(values)), std::move(lab));
}

// --- model files ------------------------------------------------------------

void save_model(const ModelFile& model, const fs::path& path) {
    const auto& cb = model.codebook;
    const auto& topo = cb.topology();
    model.anchors.validate(topo);

    ByteWriter w;
    constexpr std::array<std::uint8_t, 4> magic{'S', 'T', 'M', '1'};
    w.bytes(magic);
    w.le<std::uint16_t>(kModelFormatVersion);
    w.le<std::uint8_t>(static_cast<std::uint8_t>(topo.rank()));
    for (auto d : topo.dims()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(cb.input_dim()));
    w.le<std::uint8_t>(static_cast<std::uint8_t>(model.kind.algorithm));
    w.le<double>(model.kind.sigma_r);
    w.le<double>(model.kind.sigma_t);
    w.le<std::uint64_t>(model.seed);
    for (double v : cb.weights().data()) w.le<double>(v);

    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.anchors.size()));
    for (const auto& [label, coord] : model.anchors.entries()) {
        if (label.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw DomainError("save_model: anchor label too long");
        }
        w.le<std::uint16_t>(static_cast<std::uint16_t>(label.size()));
        w.bytes({reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
        for (double c : coord) w.le<double>(c);
    }

    auto out = open_output(path);
    out.write(reinterpret_cast<const char*>(w.buffer().data()),
              static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

ModelFile load_model(const fs::path& path) {
    ByteReader r(read_file(path), path);
    const auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "STM1")) {
        throw FormatError(where(path, 0) + ": bad model magic (expected 'STM1')");
    }
    const auto version = r.le<std::uint16_t>();
    if (version != kModelFormatVersion) {
        throw FormatError(path.string() + ": model format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const auto rank = r.le<std::uint8_t>();
    if (rank != 1 && rank != 2) throw FormatError(where(path, r.offset() - 1) + ": bad grid rank");
    std::vector<std::size_t> dims;
    for (int a = 0; a < rank; ++a) {
        const auto d = r.le<std::uint32_t>();
        if (d == 0) throw FormatError(where(path, r.offset() - 4) + ": zero grid extent");
        dims.push_back(d);
    }
    GridTopology topo(dims);
    const std::size_t m = r.le<std::uint32_t>();
    if (m == 0) throw FormatError(where(path, r.offset() - 4) + ": zero input dimension");
    const auto tag = r.le<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(Algorithm::Lvq)) {
        throw FormatError(where(path, r.offset() - 1) + ": unknown algorithm tag");
    }
    WtaKind kind{static_cast<Algorithm>(tag), r.le<double>(), 0.0};
    kind.sigma_t = r.le<double>();
    const auto seed = r.le<std::uint64_t>();

    const auto k = topo.unit_count();
    r.need(k * m * sizeof(double));
    std::vector<double> weights(k * m);
    for (auto& v : weights) v = r.le<double>();

    LabelAnchors anchors;
    const auto count = r.le<std::uint32_t>();
    for (std::uint32_t a = 0; a < count; ++a) {
        const auto len = r.le<std::uint16_t>();
        const auto raw = r.bytes(len);
        Label label(raw.begin(), raw.end());
        Coord coord(rank);
        for (auto& c : coord) c = r.le<double>();
        try {
            anchors.add(label, std::move(coord));
        } catch (const ConfigError& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    if (r.remaining() != 0) throw FormatError(where(path, r.offset()) + ": trailing bytes");

    try {
        ModelFile model{Codebook(topo, Matrix(k, m, std::move(weights))), kind, seed, std::move(anchors)};
        model.anchors.validate(topo);
        return model;
    } catch (const Error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// --- anchors ----------------------------------------------------------------

LabelAnchors parse_anchors(std::istream& in, const GridTopology& topo, const std::string& source) {
    LabelAnchors anchors;
    std::string line;
    std::size_t line_no = 0;
    bool have_grid = false;
    auto fail = [&](const std::string& what) -> ConfigError {
        return ConfigError(source + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;

        std::istringstream tokens(body);
        std::vector<std::string> fields;
        for (std::string f; tokens >> f;) fields.push_back(f);

        if (!have_grid) {
            if (fields.front() != "grid") throw fail("expected 'grid R C' or 'grid K' declaration");
            std::vector<std::size_t> dims;
            for (std::size_t f = 1; f < fields.size(); ++f) {
                std::size_t v = 0;
                auto [ptr, ec] = std::from_chars(fields[f].data(), fields[f].data() + fields[f].size(), v);
                if (ec != std::errc{} || ptr != fields[f].data() + fields[f].size() || v == 0) {
                    throw fail("bad grid extent '" + fields[f] + "'");
                }
                dims.push_back(v);
            }
            if (dims.empty() || dims.size() > 2) throw fail("grid declaration needs one or two extents");
            if (dims != topo.dims()) throw fail("grid declaration does not match the model grid");
            have_grid = true;
            continue;
        }

        if (fields.size() != 1 + topo.rank()) {
            throw fail("expected a label and " + std::to_string(topo.rank()) + " coordinate(s)");
        }
        Coord coord(topo.rank());
        for (std::size_t a = 0; a < topo.rank(); ++a) {
            if (!parse_double(fields[a + 1], coord[a])) throw fail("bad coordinate '" + fields[a + 1] + "'");
        }
        if (!topo.contains(coord)) throw fail("anchor '" + fields[0] + "' lies outside the grid");
        if (anchors.contains(fields[0])) throw fail("duplicate label '" + fields[0] + "'");
        anchors.add(fields[0], std::move(coord));
    }
    if (!have_grid) throw ConfigError(source + ": missing grid declaration");
    return anchors;
}

LabelAnchors load_anchors(const fs::path& path, const GridTopology& topo) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open anchor file '" + path.string() + "'");
    return parse_anchors(in, topo, path.string());
}

// --- image export -----------------------------------------------------------

PgmImage tile_patterns(const Matrix& patterns, std::size_t tile_rows, std::size_t tile_cols,
                       std::size_t grid_rows, std::size_t grid_cols) {
    if (tile_rows * tile_cols != patterns.cols()) {
        throw DomainError("tile " + std::to_string(tile_rows) + "x" + std::to_string(tile_cols) +
                          " does not match pattern size " + std::to_string(patterns.cols()));
    }
    if (grid_rows * grid_cols < patterns.rows()) throw DomainError("tile grid too small");

    PgmImage img;
    img.width = grid_cols * (tile_cols + 1) + 1;
    img.height = grid_rows * (tile_rows + 1) + 1;
    img.pixels.assign(img.width * img.height, 255);
    std::ostringstream comment;
    comment << grid_rows << "x" << grid_cols << " tiles of " << tile_rows << "x" << tile_cols
            << ", 1px separators";
    img.comment = comment.str();

    double lo = 0.0, hi = 0.0;
    if (!patterns.empty()) {
        const auto [mn, mx] = std::minmax_element(patterns.data().begin(), patterns.data().end());
        lo = *mn;
        hi = *mx;
    }
    const double range = hi - lo;
    for (std::size_t p = 0; p < patterns.rows(); ++p) {
        const std::size_t top = (p / grid_cols) * (tile_rows + 1) + 1;
        const std::size_t left = (p % grid_cols) * (tile_cols + 1) + 1;
        const auto row = patterns.row(p);
        for (std::size_t y = 0; y < tile_rows; ++y) {
            for (std::size_t x = 0; x < tile_cols; ++x) {
                const double v = row[y * tile_cols + x];
                const double scaled = range > 0.0 ? (v - lo) / range * 255.0 : 0.0;
                img.pixels[(top + y) * img.width + left + x] =
                    static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0)));
            }
        }
    }
    return img;
}

PgmImage prototype_grid_image(const Codebook& cb, std::size_t tile_rows, std::size_t tile_cols) {
    const auto& dims = cb.topology().dims();
    const std::size_t rows = dims.size() == 2 ? dims[0] : 1;
    const std::size_t cols = dims.size() == 2 ? dims[1] : dims[0];
    return tile_patterns(cb.weights(), tile_rows, tile_cols, rows, cols);
}

void export_prototype_grid(const Codebook& cb, std::size_t tile_rows, std::size_t tile_cols,
                           const fs::path& path) {
    write_pgm(prototype_grid_image(cb, tile_rows, tile_cols), path);
}

// --- CSV output -------------------------------------------------------------

void write_history_csv(const TrainingHistory& history, const fs::path& path) {
    auto out = open_output(path);
    out << "iteration,energy,movement,eta,sigma_r\n" << std::setprecision(17);
    for (const auto& r : history.records) {
        out << r.iteration << ',' << r.energy << ',' << r.movement << ',' << r.eta << ',' << r.sigma_r
            << '\n';
    }
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    out.precision(old);
}

}  // namespace stm
