#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "geohall/corpus.hpp"
#include "geohall/error.hpp"
#include "geohall/geostats.hpp"
#include "geohall/mocklm.hpp"
#include "geohall/pnorm.hpp"
#include "oracles.hpp"

using namespace geohall;
using geostats::LayerStatProfile;

namespace {

LayerStatProfile profile(std::string id, std::vector<double> values) {
    LayerStatProfile p;
    p.record_id = std::move(id);
    p.statistic = "HS";
    p.flags.assign(values.size(), geostats::kNoFlags);
    p.values = std::move(values);
    return p;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t k) {
    std::normal_distribution<double> nd(0.0, 2.0);
    std::vector<double> v(k);
    for (auto& x : v) x = nd(rng);
    return v;
}

}  // namespace

TEST(PerturbationNormalize, WorkedValues) {
    const std::vector<double> s{1, 2};
    EXPECT_DOUBLE_EQ(pnorm::perturbation_normalize(3.0, s), 3.0);
    const std::vector<double> flat(6, 5.0);
    EXPECT_EQ(pnorm::perturbation_normalize(5.0, flat), 0.0);
}

TEST(PerturbationNormalize, DegenerateVarianceIsNumericalError) {
    const std::vector<double> flat(6, 5.0);
    try {
        pnorm::perturbation_normalize(5.5, flat, "rec-1 layer 3");
        FAIL();
    } catch (const DegenerateVarianceError& e) {
        EXPECT_NE(std::string(e.what()).find("rec-1 layer 3"), std::string::npos);
    }
    EXPECT_THROW(pnorm::perturbation_normalize(5.5, flat), NumericalError);
}

TEST(PerturbationNormalize, NeedsTwoSiblings) {
    const std::vector<double> one{1.0};
    EXPECT_THROW(pnorm::perturbation_normalize(1.0, one), UsageError);
}

TEST(PerturbationNormalize, MatchesOracleZScore) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto sib = random_values(rng, 2 + static_cast<std::size_t>(trial % 9));
        const double base = random_values(rng, 1)[0];
        const double expected = (base - oracle::mean(sib)) / oracle::population_std(sib);
        EXPECT_NEAR(pnorm::perturbation_normalize(base, sib), expected, 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST(PerturbationNormalize, SiblingSetsAreStandardized) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto sib = random_values(rng, 2 + static_cast<std::size_t>(trial % 9));
        std::vector<double> z;
        for (double s : sib) z.push_back(pnorm::perturbation_normalize(s, sib));
        EXPECT_NEAR(oracle::mean(z), 0.0, 1e-9);
        EXPECT_NEAR(oracle::population_std(z), 1.0, 1e-9);
    }
}

TEST(PerturbationNormalize, AffineAndPermutationInvariant) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        auto sib = random_values(rng, 6);
        const double base = random_values(rng, 1)[0];
        const double z = pnorm::perturbation_normalize(base, sib);
        for (auto [a, b] : {std::pair{0.5, -3.0}, std::pair{7.0, 100.0}, std::pair{1e3, 1e-3}}) {
            std::vector<double> t;
            for (double s : sib) t.push_back(a * s + b);
            EXPECT_NEAR(pnorm::perturbation_normalize(a * base + b, t), z, 1e-9 * std::max(1.0, std::abs(z)));
        }
        std::shuffle(sib.begin(), sib.end(), rng);
        EXPECT_NEAR(pnorm::perturbation_normalize(base, sib), z, 1e-12 * std::max(1.0, std::abs(z)));
    }
}

TEST(NormalizeProfile, LayerwiseAndTagged) {
    pnorm::PerturbationGroup g;
    g.base = profile("b", {3.0, 5.0});
    g.siblings = {profile("b-p-1", {1.0, 5.0}), profile("b-p1", {2.0, 5.0})};
    g.siblings[1].flags[0] = geostats::kClampedEigenvalues;
    g.offsets = {-1, 1};
    const auto out = pnorm::normalize_profile(g);
    EXPECT_EQ(out.record_id, "b");
    EXPECT_EQ(out.statistic, "HS-Norm");
    EXPECT_EQ(out.values, (std::vector<double>{3.0, 0.0}));
    EXPECT_EQ(out.flags[0], geostats::kClampedEigenvalues);
    EXPECT_EQ(out.flags[1], geostats::kNoFlags);
}

TEST(NormalizeProfile, BaseEqualToOneSibling) {
    const auto corpora = corpus::generate_corpora(2);
    const auto& qa = corpora.math[10];
    Rng rng(1);
    const auto base = corpus::render_record(qa, corpus::HallType::baseline, 0, corpora, rng);
    const std::vector<std::int64_t> offsets{-2, -1, 1, 2};
    mocklm::MockConfig cfg;
    cfg.num_layers = 3;

    pnorm::PerturbationGroup g;
    g.base = geostats::stats_profile(mocklm::mock_extract(base, cfg).trace, geostats::Statistic::HS);
    for (const auto& s : corpus::build_perturbation_set(base, offsets))
        g.siblings.push_back(geostats::stats_profile(mocklm::mock_extract(s, cfg).trace, geostats::Statistic::HS));
    g.offsets = offsets;
    g.siblings[0] = g.base;  // the base trace duplicated into the sibling set

    const auto out = pnorm::normalize_profile(g);
    for (std::size_t l = 0; l < 3; ++l) {
        std::vector<double> col;
        for (const auto& s : g.siblings) col.push_back(s.values[l]);
        EXPECT_NEAR(out.values[l], (g.base.values[l] - oracle::mean(col)) / oracle::population_std(col), 1e-12);
    }
}

TEST(NormalizeProfile, IdenticalSiblingsGiveZero) {
    pnorm::PerturbationGroup g;
    g.base = profile("b", {1.0, -2.0, 4.0});
    g.siblings.assign(6, g.base);
    g.offsets = {-5, -2, -1, 1, 2, 5};
    EXPECT_EQ(pnorm::normalize_profile(g).values, (std::vector<double>{0, 0, 0}));
}

TEST(NormalizeProfile, SiblingOrderDoesNotMatter) {
    std::mt19937_64 rng(5);
    pnorm::PerturbationGroup g;
    g.base = profile("b", random_values(rng, 4));
    for (int i = 0; i < 6; ++i) g.siblings.push_back(profile("s" + std::to_string(i), random_values(rng, 4)));
    g.offsets = {-5, -2, -1, 1, 2, 5};
    const auto a = pnorm::normalize_profile(g);
    std::reverse(g.siblings.begin(), g.siblings.end());
    std::reverse(g.offsets.begin(), g.offsets.end());
    const auto b = pnorm::normalize_profile(g);
    for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(a.values[l], b.values[l], 1e-12);
}

TEST(NormalizeProfile, ValidatesGroup) {
    pnorm::PerturbationGroup g;
    g.base = profile("b", {1.0, 2.0});
    g.siblings = {profile("s", {1.0, 2.0})};
    g.offsets = {1};
    EXPECT_THROW(pnorm::normalize_profile(g), UsageError);
    g.siblings.push_back(profile("t", {1.0}));
    g.offsets.push_back(2);
    EXPECT_THROW(pnorm::normalize_profile(g), UsageError);
    g.siblings[1] = profile("t", {1.0, 3.0});
    g.siblings[1].statistic = "ME";
    EXPECT_THROW(pnorm::normalize_profile(g), UsageError);
}
