#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "geohall/corpus.hpp"
#include "geohall/error.hpp"
#include "geohall/mocklm.hpp"
#include "geohall/trace.hpp"

using namespace geohall;
using namespace geohall::trace;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() / (std::string("geohall_trace_") + info->test_suite_name() + "_" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

ActivationTrace random_trace(std::uint64_t seed, int L = 3, int m = 5, int d = 4, int n = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-3.0f, 3.0f), a(0.01f, 1.0f);
    ActivationTrace t;
    t.record_id = "rec-" + std::to_string(seed);
    t.hidden_dim = d;
    t.num_heads = n;
    for (int l = 0; l < L; ++l) {
        Matrix h(m, d), att(n, m);
        for (Eigen::Index i = 0; i < h.size(); ++i) h.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < att.size(); ++i) att.data()[i] = a(rng);
        t.layers.push_back(h);
        t.attn_diag.push_back(att);
    }
    return t;
}

}  // namespace

TEST(TensorFile, OneDimensionalScalarIs24Bytes) {
    TempDir tmp;
    const auto f = tmp.path() / "x.ght";
    const std::uint64_t dims[] = {1};
    const double vals[] = {2.0};
    write_tensor(f, DType::f32, dims, vals);
    const auto bytes = slurp(f);
    ASSERT_EQ(bytes.size(), 24u);
    EXPECT_EQ(bytes.substr(0, 4), "GHT1");
    const float two = 2.0f;
    EXPECT_EQ(std::memcmp(bytes.data() + 20, &two, 4), 0);
}

TEST(TensorFile, HeaderLayout) {
    TempDir tmp;
    const auto f = tmp.path() / "x.ght";
    const std::uint64_t dims[] = {1, 1};
    const double vals[] = {2.0};
    write_tensor(f, DType::f32, dims, vals);
    const auto b = slurp(f);
    // magic, dtype, ndim, two u64 dims, one f32.
    ASSERT_EQ(b.size(), 4u + 4u + 4u + 16u + 4u);
    const unsigned char expected_head[] = {'G', 'H', 'T', '1', 0, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(std::memcmp(b.data(), expected_head, sizeof expected_head), 0);
    const unsigned char two_le[] = {0x00, 0x00, 0x00, 0x40};
    EXPECT_EQ(std::memcmp(b.data() + 28, two_le, 4), 0);
}

TEST(TensorFile, F32RoundTripIsBitwise) {
    TempDir tmp;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    std::vector<double> vals(3 * 7 * 5);
    for (auto& v : vals) v = u(rng);
    const std::uint64_t dims[] = {3, 7, 5};
    write_tensor(tmp.path() / "a.ght", DType::f32, dims, vals);
    const auto t = read_tensor(tmp.path() / "a.ght");
    EXPECT_EQ(t.dtype, DType::f32);
    EXPECT_EQ(t.dims, (std::vector<std::uint64_t>{3, 7, 5}));
    ASSERT_EQ(t.values.size(), vals.size());
    EXPECT_EQ(std::memcmp(t.values.data(), vals.data(), vals.size() * sizeof(double)), 0);
    write_tensor(tmp.path() / "b.ght", DType::f32, dims, t.values);
    EXPECT_EQ(slurp(tmp.path() / "a.ght"), slurp(tmp.path() / "b.ght"));
}

TEST(TensorFile, F16OneIsExact) {
    TempDir tmp;
    const std::uint64_t dims[] = {2};
    const double vals[] = {1.0, -0.5};
    write_tensor(tmp.path() / "h.ght", DType::f16, dims, vals);
    EXPECT_EQ(slurp(tmp.path() / "h.ght").size(), 4u + 4u + 4u + 8u + 4u);
    const auto t = read_tensor(tmp.path() / "h.ght");
    EXPECT_EQ(t.dtype, DType::f16);
    EXPECT_EQ(t.values, (std::vector<double>{1.0, -0.5}));
}

TEST(TensorFile, DistinctErrors) {
    TempDir tmp;
    const auto f = tmp.path() / "t.ght";
    const std::uint64_t dims[] = {2, 2};
    const double vals[] = {1, 2, 3, 4};
    write_tensor(f, DType::f32, dims, vals);
    const auto good = slurp(f);

    auto bad = good;
    bad.replace(0, 4, "XXXX");
    spit(f, bad);
    try {
        read_tensor(f);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("t.ght"), std::string::npos);
    }

    spit(f, good.substr(0, good.size() - 2));
    EXPECT_THROW(read_tensor(f), FormatError);
    spit(f, good + "junk");
    EXPECT_THROW(read_tensor(f), FormatError);

    bad = good;
    bad[4] = 7;
    spit(f, bad);
    EXPECT_THROW(read_tensor(f), FormatError);

    bad = good;
    const std::uint64_t huge = 0x4000000000000000ull;
    std::memcpy(bad.data() + 12, &huge, 8);
    std::memcpy(bad.data() + 20, &huge, 8);
    spit(f, bad);
    EXPECT_THROW(read_tensor(f), DataError);

    bad = good;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bad.data() + 28, &nan, 4);
    spit(f, bad);
    EXPECT_THROW(read_tensor(f), ValueError);

    EXPECT_THROW(read_tensor(tmp.path() / "missing.ght"), IoError);
}

TEST(TensorFile, WriteRejectsMismatchedCountsAndNonFinite) {
    TempDir tmp;
    const std::uint64_t dims[] = {3};
    const double two[] = {1, 2};
    EXPECT_THROW(write_tensor(tmp.path() / "x.ght", DType::f32, dims, two), ConsistencyError);
    const std::uint64_t one[] = {1};
    const double inf[] = {std::numeric_limits<double>::infinity()};
    EXPECT_THROW(write_tensor(tmp.path() / "x.ght", DType::f32, one, inf), ValueError);
    const double big[] = {1e6};
    EXPECT_THROW(write_tensor(tmp.path() / "x.ght", DType::f16, one, big), ValueError);
}

TEST(Trace, WriteReadRoundTrip) {
    TempDir tmp;
    const auto t = random_trace(7);
    const auto entry = write_trace(t, tmp.path(), DType::f32);
    EXPECT_EQ(entry.num_layers, 3);
    EXPECT_EQ(entry.seq_len, 5);
    EXPECT_EQ(entry.hidden_dim, 4);
    EXPECT_EQ(entry.num_heads, 2);
    ASSERT_EQ(entry.layer_files.size(), 3u);
    EXPECT_EQ(entry.layer_files[1], "rec-7/L01.hidden.ght");
    EXPECT_EQ(entry.attn_file, "rec-7/attn.ght");
    EXPECT_EQ(read_tensor(tmp.path() / entry.attn_file).dims, (std::vector<std::uint64_t>{3, 2, 5}));

    const auto back = read_trace(entry, tmp.path());
    EXPECT_EQ(back.record_id, t.record_id);
    ASSERT_EQ(back.num_layers(), 3);
    for (int l = 0; l < 3; ++l) {
        EXPECT_TRUE(back.layers[static_cast<std::size_t>(l)] == t.layers[static_cast<std::size_t>(l)]);
        EXPECT_TRUE(back.attn_diag[static_cast<std::size_t>(l)] == t.attn_diag[static_cast<std::size_t>(l)]);
    }
}

TEST(Trace, GramPayloadFiles) {
    TempDir tmp;
    const auto g = to_gram(random_trace(8));
    EXPECT_EQ(g.payload_kind, PayloadKind::gram);
    EXPECT_EQ(g.layers[0].rows(), 5);
    EXPECT_EQ(g.layers[0].cols(), 5);
    const auto entry = write_trace(g, tmp.path(), DType::f32);
    EXPECT_EQ(entry.layer_files[0], "rec-8/L00.gram.ght");
    EXPECT_EQ(entry.payload_kind, PayloadKind::gram);
    EXPECT_NO_THROW(read_trace(entry, tmp.path()));
}

TEST(Trace, ManifestDimMismatchIsConsistencyError) {
    TempDir tmp;
    auto entry = write_trace(random_trace(9), tmp.path(), DType::f32);
    entry.seq_len = 6;
    EXPECT_THROW(read_trace(entry, tmp.path()), ConsistencyError);
    entry.seq_len = 5;
    entry.dtype = DType::f16;
    EXPECT_THROW(read_trace(entry, tmp.path()), ConsistencyError);
}

TEST(Trace, ValidateCatchesBrokenInvariants) {
    auto t = random_trace(10);
    EXPECT_NO_THROW(t.validate());
    auto bad = t;
    bad.attn_diag[1](0, 0) = 1.5;
    EXPECT_THROW(bad.validate(), ValueError);
    bad = t;
    bad.layers[0](0, 0) = std::nan("");
    EXPECT_THROW(bad.validate(), ValueError);
    bad = t;
    bad.attn_diag.pop_back();
    EXPECT_THROW(bad.validate(), ConsistencyError);
    auto g = to_gram(t);
    g.layers[0](0, 1) += 1.0;
    EXPECT_THROW(g.validate(), ValueError);
}

TEST(Manifest, JsonLineRoundTrip) {
    const auto corpora = corpus::generate_corpora(1);
    Rng rng(1);
    const auto rec = corpus::render_record(corpora.math[5], corpus::HallType::incorrectness, 2, corpora, rng);
    mocklm::MockConfig cfg;
    cfg.num_layers = 2;
    const auto out = mocklm::mock_extract(rec, cfg);
    TempDir tmp;
    auto entry = write_trace(out.trace, tmp.path(), DType::f16);
    entry.labels = rec;
    entry.answer_token_span = out.answer_token_span;
    const auto line = entry_to_json_line(entry);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(entry_from_json_line(line), entry);
    for (const char* key : {"\"L\":", "\"m\":", "\"d\":", "\"n\":", "\"dtype\":\"f16\"", "\"payload_kind\":\"hidden\"",
                            "\"answer_token_span\":", "\"hall_type\":\"incorrectness\""})
        EXPECT_NE(line.find(key), std::string::npos) << key;
}

TEST(Manifest, WriterAndReader) {
    TempDir tmp;
    std::vector<TraceManifestEntry> written;
    {
        ManifestWriter w(tmp.path());
        for (std::uint64_t s = 0; s < 4; ++s) {
            auto e = write_trace(random_trace(s), tmp.path(), DType::f32);
            e.labels.record_id = e.record_id;
            w.append(e);
            written.push_back(e);
        }
    }
    const auto back = read_trace_manifest(tmp.path());
    EXPECT_EQ(back, written);
    std::size_t dirs = 0;
    for (const auto& de : fs::directory_iterator(tmp.path())) dirs += de.is_directory();
    EXPECT_EQ(dirs, back.size());
}

TEST(Manifest, BadLinesAreFormatErrors) {
    EXPECT_THROW(entry_from_json_line("{"), FormatError);
    EXPECT_THROW(entry_from_json_line("{\"record_id\":\"x\"}"), FormatError);
    TempDir tmp;
    EXPECT_THROW(read_trace_manifest(tmp.path()), IoError);
}

TEST(DType, Parse) {
    EXPECT_EQ(parse_dtype("f16"), DType::f16);
    EXPECT_EQ(parse_payload_kind("gram"), PayloadKind::gram);
    EXPECT_THROW(parse_dtype("f64"), UsageError);
    EXPECT_THROW(parse_payload_kind("weights"), UsageError);
}
