#include "geohall/trace.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "geohall/error.hpp"
#include "geohall/json_io.hpp"

namespace geohall::trace {

namespace {

constexpr std::array<char, 4> kMagic{'G', 'H', 'T', '1'};
constexpr double kSymmetryRelTol = 1e-5;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

std::size_t element_size(DType t) { return t == DType::f32 ? 4 : 2; }

std::uint64_t checked_product(std::span<const std::uint64_t> dims, const std::string& what) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) throw DataError(what + ": dims overflow");
        n *= d;
    }
    return n;
}

std::string layer_file_name(int layer, PayloadKind kind) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "L%02d.%s.ght", layer, kind == PayloadKind::hidden ? "hidden" : "gram");
    return buf;
}

std::vector<double> flatten(const std::vector<Matrix>& mats) {
    std::vector<double> out;
    for (const auto& m : mats) out.insert(out.end(), m.data(), m.data() + m.size());
    return out;
}

Matrix to_matrix(const Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(m.data(), t.values.data() + offset, rows * cols * sizeof(double));
    return m;
}

void expect_dims(const Tensor& t, std::initializer_list<std::uint64_t> want, const std::filesystem::path& file) {
    if (t.dims != std::vector<std::uint64_t>(want)) {
        std::ostringstream ss;
        ss << file.string() << ": dims [";
        for (std::size_t i = 0; i < t.dims.size(); ++i) ss << (i ? "," : "") << t.dims[i];
        ss << "] disagree with manifest [";
        std::size_t i = 0;
        for (auto d : want) ss << (i++ ? "," : "") << d;
        ss << "]";
        throw ConsistencyError(ss.str());
    }
}

}  // namespace

std::string_view to_string(DType t) { return t == DType::f32 ? "f32" : "f16"; }
std::string_view to_string(PayloadKind k) { return k == PayloadKind::hidden ? "hidden" : "gram"; }

DType parse_dtype(std::string_view s) {
    if (s == "f32") return DType::f32;
    if (s == "f16") return DType::f16;
    throw UsageError("unknown dtype '" + std::string(s) + "' (expected f32 or f16)");
}

PayloadKind parse_payload_kind(std::string_view s) {
    if (s == "hidden") return PayloadKind::hidden;
    if (s == "gram") return PayloadKind::gram;
    throw UsageError("unknown payload kind '" + std::string(s) + "' (expected hidden or gram)");
}

void ActivationTrace::validate() const {
    const std::string who = "trace " + record_id;
    if (layers.empty()) throw ConsistencyError(who + ": needs at least one layer");
    if (attn_diag.size() != layers.size())
        throw ConsistencyError(who + ": " + std::to_string(attn_diag.size()) + " attention layers for " +
                               std::to_string(layers.size()) + " payload layers");
    const auto m = layers.front().rows();
    if (m < 1) throw ConsistencyError(who + ": empty sequence");
    if (num_heads < 1) throw ConsistencyError(who + ": needs at least one head");
    const auto cols = payload_kind == PayloadKind::hidden ? static_cast<Eigen::Index>(hidden_dim) : m;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& x = layers[l];
        const std::string where = who + " layer " + std::to_string(l);
        if (x.rows() != m || x.cols() != cols) throw ConsistencyError(where + ": payload shape mismatch");
        if (!x.allFinite()) throw ValueError(where + ": non-finite payload entry");
        if (payload_kind == PayloadKind::gram) {
            const double scale = std::max(x.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
            if ((x - x.transpose()).cwiseAbs().maxCoeff() > kSymmetryRelTol * scale)
                throw ValueError(where + ": Gram matrix is not symmetric");
        }
        const auto& a = attn_diag[l];
        if (a.rows() != num_heads || a.cols() != m) throw ConsistencyError(where + ": attention shape mismatch");
        if (!a.allFinite()) throw ValueError(where + ": non-finite attention entry");
        if (a.minCoeff() < 0.0 || a.maxCoeff() > 1.0) throw ValueError(where + ": attention diagonal outside [0,1]");
    }
}

ActivationTrace to_gram(const ActivationTrace& trace) {
    if (trace.payload_kind == PayloadKind::gram) return trace;
    ActivationTrace out = trace;
    out.payload_kind = PayloadKind::gram;
    for (auto& layer : out.layers) layer = Matrix(layer * layer.transpose());
    return out;
}

void write_tensor(const std::filesystem::path& file, DType dtype, std::span<const std::uint64_t> dims,
                  std::span<const double> values) {
    const auto count = checked_product(dims, file.string());
    if (count != values.size()) throw ConsistencyError(file.string() + ": value count does not match dims");
    if (count > std::numeric_limits<std::uint64_t>::max() / element_size(dtype))
        throw DataError(file.string() + ": dims overflow");

    std::string buf(kMagic.begin(), kMagic.end());
    put_u32(buf, static_cast<std::uint32_t>(dtype));
    put_u32(buf, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put_u64(buf, d);
    buf.reserve(buf.size() + values.size() * element_size(dtype));
    for (double v : values) {
        if (dtype == DType::f32) {
            const auto f = static_cast<float>(v);
            if (!std::isfinite(f)) throw ValueError(file.string() + ": value not representable as f32");
            put_u32(buf, std::bit_cast<std::uint32_t>(f));
        } else {
            const Eigen::half h(static_cast<float>(v));
            if (!(Eigen::numext::isfinite)(h)) throw ValueError(file.string() + ": value not representable as f16");
            const auto bits = Eigen::numext::bit_cast<std::uint16_t>(h);
            buf.push_back(static_cast<char>(bits & 0xFFu));
            buf.push_back(static_cast<char>(bits >> 8));
        }
    }

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + file.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for " + file.string());
}

Tensor read_tensor(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open tensor file " + file.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::string name = file.string();

    if (bytes.size() < 12) throw FormatError(name + ": truncated header");
    if (std::memcmp(p, kMagic.data(), 4) != 0) throw FormatError(name + ": bad magic (expected GHT1)");
    Tensor t;
    const auto code = static_cast<std::uint32_t>(get_le(p + 4, 4));
    if (code > 1) throw FormatError(name + ": unknown dtype code " + std::to_string(code));
    t.dtype = static_cast<DType>(code);
    const auto ndim = get_le(p + 8, 4);
    const std::size_t header = 12 + 8 * ndim;
    if (ndim > 8 || bytes.size() < header) throw FormatError(name + ": truncated header");
    for (std::uint64_t i = 0; i < ndim; ++i) t.dims.push_back(get_le(p + 12 + 8 * i, 8));
    const auto count = checked_product(t.dims, name);
    const auto esize = element_size(t.dtype);
    if (count > (bytes.size() - header) / esize || bytes.size() - header != count * esize)
        throw FormatError(name + ": payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                          std::to_string(count * esize) + " (truncated or trailing data)");

    t.values.resize(count);
    const unsigned char* q = p + header;
    for (std::uint64_t i = 0; i < count; ++i) {
        double v = 0.0;
        if (t.dtype == DType::f32) {
            v = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(q + 4 * i, 4)));
        } else {
            const auto bits = static_cast<std::uint16_t>(get_le(q + 2 * i, 2));
            v = static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(bits));
        }
        if (!std::isfinite(v)) throw ValueError(name + ": non-finite value at element " + std::to_string(i));
        t.values[i] = v;
    }
    return t;
}

TraceManifestEntry write_trace(const ActivationTrace& trace, const std::filesystem::path& dir, DType dtype) {
    trace.validate();
    const auto rec_dir = dir / trace.record_id;
    std::error_code ec;
    std::filesystem::create_directories(rec_dir, ec);
    if (ec) throw IoError("cannot create " + rec_dir.string() + ": " + ec.message());

    TraceManifestEntry e;
    e.record_id = trace.record_id;
    e.num_layers = trace.num_layers();
    e.seq_len = trace.seq_len();
    e.hidden_dim = trace.hidden_dim;
    e.num_heads = trace.num_heads;
    e.dtype = dtype;
    e.payload_kind = trace.payload_kind;
    e.labels.record_id = trace.record_id;

    for (int l = 0; l < trace.num_layers(); ++l) {
        const auto& x = trace.layers[static_cast<std::size_t>(l)];
        const std::string rel = trace.record_id + "/" + layer_file_name(l, trace.payload_kind);
        const std::array<std::uint64_t, 2> dims{static_cast<std::uint64_t>(x.rows()),
                                                static_cast<std::uint64_t>(x.cols())};
        write_tensor(dir / rel, dtype, dims, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
        e.layer_files.push_back(rel);
    }
    e.attn_file = trace.record_id + "/attn.ght";
    const std::array<std::uint64_t, 3> adims{static_cast<std::uint64_t>(trace.num_layers()),
                                             static_cast<std::uint64_t>(trace.num_heads),
                                             static_cast<std::uint64_t>(trace.seq_len())};
    write_tensor(dir / e.attn_file, dtype, adims, flatten(trace.attn_diag));
    return e;
}

ActivationTrace read_trace(const TraceManifestEntry& entry, const std::filesystem::path& dir) {
    if (entry.num_layers < 1 || entry.seq_len < 1)
        throw ConsistencyError("manifest entry " + entry.record_id + ": L and m must be >= 1");
    if (static_cast<int>(entry.layer_files.size()) != entry.num_layers)
        throw ConsistencyError("manifest entry " + entry.record_id + ": " + std::to_string(entry.layer_files.size()) +
                               " layer files for L=" + std::to_string(entry.num_layers));

    ActivationTrace t;
    t.record_id = entry.record_id;
    t.hidden_dim = entry.hidden_dim;
    t.num_heads = entry.num_heads;
    t.payload_kind = entry.payload_kind;
    const auto m = static_cast<std::uint64_t>(entry.seq_len);
    const auto cols = entry.payload_kind == PayloadKind::hidden ? static_cast<std::uint64_t>(entry.hidden_dim) : m;

    auto check_dtype = [&](const Tensor& x, const std::filesystem::path& f) {
        if (x.dtype != entry.dtype)
            throw ConsistencyError(f.string() + ": dtype " + std::string(to_string(x.dtype)) + " but manifest says " +
                                   std::string(to_string(entry.dtype)));
    };
    for (const auto& rel : entry.layer_files) {
        const auto f = dir / rel;
        const auto x = read_tensor(f);
        check_dtype(x, f);
        expect_dims(x, {m, cols}, f);
        t.layers.push_back(to_matrix(x, m, cols));
    }
    const auto af = dir / entry.attn_file;
    const auto a = read_tensor(af);
    check_dtype(a, af);
    const auto n = static_cast<std::uint64_t>(entry.num_heads);
    expect_dims(a, {static_cast<std::uint64_t>(entry.num_layers), n, m}, af);
    for (int l = 0; l < entry.num_layers; ++l)
        t.attn_diag.push_back(to_matrix(a, n, m, static_cast<std::size_t>(l) * n * m));
    t.validate();
    return t;
}

std::string entry_to_json_line(const TraceManifestEntry& e) {
    Json j;
    j["record_id"] = e.record_id;
    j["layer_files"] = e.layer_files;
    j["attn_file"] = e.attn_file;
    j["L"] = e.num_layers;
    j["m"] = e.seq_len;
    j["d"] = e.hidden_dim;
    j["n"] = e.num_heads;
    j["dtype"] = std::string(to_string(e.dtype));
    j["payload_kind"] = std::string(to_string(e.payload_kind));
    j["answer_token_span"] = Json::array({e.answer_token_span.start, e.answer_token_span.end});
    record_to_json(j, e.labels);
    return j.dump();
}

TraceManifestEntry entry_from_json_line(std::string_view line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::parse_error& ex) {
        throw FormatError(std::string("trace manifest: ") + ex.what());
    }
    TraceManifestEntry e;
    try {
        e.record_id = j.at("record_id").get<std::string>();
        e.layer_files = j.at("layer_files").get<std::vector<std::string>>();
        e.attn_file = j.at("attn_file").get<std::string>();
        e.num_layers = j.at("L").get<int>();
        e.seq_len = j.at("m").get<int>();
        e.hidden_dim = j.at("d").get<int>();
        e.num_heads = j.at("n").get<int>();
        e.dtype = parse_dtype(j.at("dtype").get<std::string>());
        e.payload_kind = parse_payload_kind(j.at("payload_kind").get<std::string>());
        const auto& span = j.at("answer_token_span");
        e.answer_token_span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    } catch (const Json::exception& ex) {
        throw FormatError(std::string("trace manifest entry: ") + ex.what());
    } catch (const UsageError& ex) {
        throw FormatError(std::string("trace manifest entry: ") + ex.what());
    }
    e.labels = record_from_json(j);
    if (e.answer_token_span.end > static_cast<std::size_t>(e.seq_len) || e.answer_token_span.start > e.answer_token_span.end)
        throw ConsistencyError("trace manifest entry " + e.record_id + ": answer_token_span outside [0, m]");
    return e;
}

ManifestWriter::ManifestWriter(const std::filesystem::path& dir, bool truncate) : path_(dir / kManifestName) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    out_.open(path_, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
    if (!out_) throw IoError("cannot open " + path_.string());
}

void ManifestWriter::append(const TraceManifestEntry& entry) {
    const std::string line = entry_to_json_line(entry) + "\n";
    std::lock_guard lock(mu_);
    out_ << line;
    out_.flush();
    if (!out_) throw IoError("cannot append to " + path_.string());
}

std::vector<TraceManifestEntry> read_trace_manifest(const std::filesystem::path& dir) {
    const auto path = dir / kManifestName;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace manifest " + path.string());
    std::vector<TraceManifestEntry> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(entry_from_json_line(line));
    return out;
}

}  // namespace geohall::trace
