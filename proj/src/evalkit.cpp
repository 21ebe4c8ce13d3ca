#include "geohall/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "geohall/error.hpp"
#include "geohall/json_io.hpp"

namespace geohall::evalkit {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    // Width counts bytes; every label here is ASCII.
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string cell_text(const EvalCell* cell) {
    if (cell == nullptr) return "n/a";
    char buf[32];
    if (cell->best_layer) std::snprintf(buf, sizeof buf, "%.2f (%02d)", cell->best_auroc, *cell->best_layer);
    else std::snprintf(buf, sizeof buf, "%.2f (--)", cell->best_auroc);
    return buf;
}

}  // namespace

double auroc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) throw UsageError("auroc: both score lists must be non-empty");
    std::vector<std::pair<double, bool>> all;
    all.reserve(pos.size() + neg.size());
    for (double v : pos) all.emplace_back(v, true);
    for (double v : neg) all.emplace_back(v, false);
    for (const auto& [v, _] : all)
        if (!std::isfinite(v)) throw ValueError("auroc: non-finite score");
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    // Doubled midranks keep the rank sum integral: ranks i+1..j average to (i+j+1)/2.
    std::uint64_t rank_sum2 = 0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i + 1;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        std::uint64_t positives = 0;
        for (std::size_t k = i; k < j; ++k) positives += all[k].second ? 1 : 0;
        rank_sum2 += positives * static_cast<std::uint64_t>(i + j + 1);
        i = j;
    }
    const auto np = static_cast<std::uint64_t>(pos.size());
    const auto nn = static_cast<std::uint64_t>(neg.size());
    const std::uint64_t u2 = rank_sum2 - np * (np + 1);
    return static_cast<double>(u2) / (2.0 * static_cast<double>(np) * static_cast<double>(nn));
}

std::string describe(const std::string& statistic, const Condition& c) {
    return statistic + "/" + std::string(corpus::to_string(c.dataset)) + "/" +
           std::string(corpus::to_string(c.hall_type)) + "/" + std::to_string(c.level);
}

EvalCell layer_sweep(std::span<const LabeledProfile> profiles, const std::string& statistic, const Condition& condition) {
    const std::string name = describe(statistic, condition);
    std::vector<const LayerStatProfile*> positives;
    std::vector<const LayerStatProfile*> negatives;
    for (const auto& p : profiles) {
        if (p.is_perturbation || p.dataset != condition.dataset || p.profile.statistic != statistic) continue;
        if (p.hall_type == HallType::baseline) negatives.push_back(&p.profile);
        else if (p.hall_type == condition.hall_type && p.level == condition.level) positives.push_back(&p.profile);
    }
    if (positives.empty()) throw DataError(name + ": no hallucination records");
    if (negatives.empty()) throw DataError(name + ": no baseline records");

    const auto layers = positives.front()->values.size();
    for (const auto* group : {&positives, &negatives})
        for (const auto* p : *group)
            if (p->values.size() != layers)
                throw DataError(name + ": record " + p->record_id + " has " + std::to_string(p->values.size()) +
                                " layers, expected " + std::to_string(layers));

    EvalCell cell;
    cell.statistic = statistic;
    cell.domain = condition.dataset;
    cell.hall_type = condition.hall_type;
    cell.level = condition.level;
    cell.num_positive = positives.size();
    cell.num_negative = negatives.size();
    std::vector<double> pos(positives.size());
    std::vector<double> neg(negatives.size());
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t i = 0; i < positives.size(); ++i) pos[i] = positives[i]->values[l];
        for (std::size_t i = 0; i < negatives.size(); ++i) neg[i] = negatives[i]->values[l];
        cell.auroc_per_layer.push_back(auroc(pos, neg));
    }
    const auto best = std::max_element(cell.auroc_per_layer.begin(), cell.auroc_per_layer.end());
    cell.best_auroc = *best;
    const auto at_max = std::count_if(cell.auroc_per_layer.begin(), cell.auroc_per_layer.end(),
                                      [&](double a) { return a >= cell.best_auroc - kTieTol; });
    cell.tie = at_max > 1;
    if (!cell.tie) cell.best_layer = static_cast<int>(best - cell.auroc_per_layer.begin());
    return cell;
}

const std::vector<std::pair<HallType, int>>& table_columns() {
    static const std::vector<std::pair<HallType, int>> cols{
        {HallType::incorrectness, 1}, {HallType::incorrectness, 2}, {HallType::incorrectness, 3},
        {HallType::confidence, 3},    {HallType::irrelevance, 3},   {HallType::incoherence, 3},
        {HallType::incompleteness, 3}};
    return cols;
}

const EvalCell* EvalReport::find(const std::string& statistic, Domain d, HallType t, int level) const {
    for (const auto& c : cells)
        if (c.statistic == statistic && c.domain == d && c.hall_type == t && c.level == level) return &c;
    return nullptr;
}

EvalReport detection_table(std::span<const LabeledProfile> profiles, std::span<const geostats::Statistic> statistics,
                           bool normalized) {
    EvalReport report;
    report.normalized = normalized;
    for (auto s : statistics) {
        std::string name(geostats::to_string(s));
        report.statistics.push_back(normalized ? name + "-Norm" : name);
    }
    for (Domain d : kTableDomains) {
        for (const auto& stat : report.statistics) {
            for (const auto& [type, level] : table_columns()) {
                const Condition cond{d, type, level};
                try {
                    report.cells.push_back(layer_sweep(profiles, stat, cond));
                } catch (const DataError& e) {
                    report.missing.push_back(e.what());
                }
            }
        }
    }
    return report;
}

std::string render_text(const EvalReport& report) {
    constexpr std::size_t kLabel = 10;
    constexpr std::size_t kCell = 11;
    std::ostringstream out;
    out << "Hallucination detection AUROC (best layer in parentheses, (--) on ties)"
        << (report.normalized ? ", perturbation-normalized" : "") << "\n";

    std::string head1 = pad("", kLabel);
    std::string head2 = pad("", kLabel);
    for (const auto& [type, level] : table_columns()) {
        const bool first_of_type = type != HallType::incorrectness || level == 1;
        head1 += pad(first_of_type ? std::string(corpus::to_string(type)) : "", kCell + 1);
        head2 += pad("Level " + std::to_string(level), kCell + 1);
    }
    const auto rtrim = [](std::string s) {
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s;
    };
    out << rtrim(head1) << "\n" << rtrim(head2) << "\n";
    for (Domain d : kTableDomains) {
        out << std::string(corpus::to_string(d)) << "\n";
        for (const auto& stat : report.statistics) {
            std::string row = pad(stat, kLabel);
            for (const auto& [type, level] : table_columns())
                row += pad(cell_text(report.find(stat, d, type, level)), kCell + 1);
            out << rtrim(row) << "\n";
        }
    }
    if (!report.missing.empty()) {
        out << "missing cells:\n";
        for (const auto& m : report.missing) out << "  " << m << "\n";
    }
    return out.str();
}

std::string report_to_json(const EvalReport& report) {
    Json j;
    j["schema_version"] = report.schema_version;
    j["normalized"] = report.normalized;
    j["statistics"] = report.statistics;
    Json cells = Json::array();
    for (const auto& c : report.cells) {
        Json jc;
        jc["statistic"] = c.statistic;
        jc["domain"] = std::string(corpus::to_string(c.domain));
        jc["hall_type"] = std::string(corpus::to_string(c.hall_type));
        jc["level"] = c.level;
        jc["auroc_per_layer"] = c.auroc_per_layer;
        jc["best_auroc"] = c.best_auroc;
        jc["best_layer"] = c.best_layer ? Json(*c.best_layer) : Json(nullptr);
        jc["tie"] = c.tie;
        jc["num_positive"] = c.num_positive;
        jc["num_negative"] = c.num_negative;
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    j["missing"] = report.missing;
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    try {
        const Json j = Json::parse(text);
        EvalReport r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kSchemaVersion)
            throw FormatError("report schema_version " + std::to_string(r.schema_version) + " is not supported");
        r.normalized = j.at("normalized").get<bool>();
        r.statistics = j.at("statistics").get<std::vector<std::string>>();
        for (const auto& jc : j.at("cells")) {
            EvalCell c;
            c.statistic = jc.at("statistic").get<std::string>();
            c.domain = corpus::parse_domain(jc.at("domain").get<std::string>());
            c.hall_type = corpus::parse_hall_type(jc.at("hall_type").get<std::string>());
            c.level = jc.at("level").get<int>();
            c.auroc_per_layer = jc.at("auroc_per_layer").get<std::vector<double>>();
            c.best_auroc = jc.at("best_auroc").get<double>();
            if (!jc.at("best_layer").is_null()) c.best_layer = jc.at("best_layer").get<int>();
            c.tie = jc.at("tie").get<bool>();
            c.num_positive = jc.at("num_positive").get<std::size_t>();
            c.num_negative = jc.at("num_negative").get<std::size_t>();
            r.cells.push_back(std::move(c));
        }
        r.missing = j.at("missing").get<std::vector<std::string>>();
        return r;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("report: ") + e.what());
    } catch (const UsageError& e) {
        throw FormatError(std::string("report: ") + e.what());
    }
}

std::string DistributionSummary::group_key() const {
    std::string key = statistic;
    key += "|" + (domain ? std::string(corpus::to_string(*domain)) : std::string("*"));
    key += "|" + (hall_type ? std::string(corpus::to_string(*hall_type)) : std::string("*"));
    key += "|" + (level ? std::to_string(*level) : std::string("*"));
    return key;
}

std::vector<DistributionSummary> distribution_summary(std::span<const LabeledProfile> profiles, GroupBy group_by,
                                                      bool baseline_relative) {
    using Key = std::tuple<std::string, int, int, int>;  // statistic, domain, type, level (-1 = any)
    auto key_of = [&](const LabeledProfile& p) {
        return Key{p.profile.statistic, group_by.domain ? static_cast<int>(p.dataset) : -1,
                   group_by.hall_type ? static_cast<int>(p.hall_type) : -1, group_by.level ? p.level : -1};
    };

    std::map<Key, std::vector<const LabeledProfile*>> groups;
    for (const auto& p : profiles)
        if (!p.is_perturbation) groups[key_of(p)].push_back(&p);

    // Baseline reference means keyed by (statistic, domain or -1).
    std::map<std::pair<std::string, int>, std::vector<double>> baseline_mean;
    if (baseline_relative) {
        std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::size_t>> acc;
        for (const auto& p : profiles) {
            if (p.is_perturbation || p.hall_type != HallType::baseline) continue;
            auto& [sum, n] = acc[{p.profile.statistic, group_by.domain ? static_cast<int>(p.dataset) : -1}];
            if (sum.empty()) sum.assign(p.profile.values.size(), 0.0);
            if (sum.size() != p.profile.values.size())
                throw DataError("distribution_summary: inconsistent layer counts for " + p.profile.record_id);
            for (std::size_t l = 0; l < sum.size(); ++l) sum[l] += p.profile.values[l];
            ++n;
        }
        for (auto& [k, v] : acc) {
            for (auto& s : v.first) s /= static_cast<double>(v.second);
            baseline_mean[k] = std::move(v.first);
        }
    }

    std::vector<DistributionSummary> out;
    for (const auto& [key, members] : groups) {
        const auto& [stat, dom, type, level] = key;
        DistributionSummary s;
        s.statistic = stat;
        if (dom >= 0) s.domain = static_cast<Domain>(dom);
        if (type >= 0) s.hall_type = static_cast<HallType>(type);
        if (level >= 0) s.level = level;
        s.count = members.size();

        const auto layers = members.front()->profile.values.size();
        std::vector<double> ref(layers, 0.0);
        if (baseline_relative) {
            const auto it = baseline_mean.find({stat, dom});
            if (it == baseline_mean.end())
                throw DataError("distribution_summary: no baseline group for " + s.group_key());
            ref = it->second;
        }
        s.mean.assign(layers, 0.0);
        s.stddev.assign(layers, 0.0);
        for (const auto* m : members) {
            if (m->profile.values.size() != layers)
                throw DataError("distribution_summary: inconsistent layer counts in " + s.group_key());
            for (std::size_t l = 0; l < layers; ++l) s.mean[l] += m->profile.values[l] - ref[l];
        }
        for (auto& v : s.mean) v /= static_cast<double>(members.size());
        for (const auto* m : members)
            for (std::size_t l = 0; l < layers; ++l) {
                const double d = m->profile.values[l] - ref[l] - s.mean[l];
                s.stddev[l] += d * d;
            }
        for (auto& v : s.stddev) v = std::sqrt(v / static_cast<double>(members.size()));
        out.push_back(std::move(s));
    }
    return out;
}

void write_distribution_csv(std::ostream& out, std::span<const DistributionSummary> summaries) {
    out << "group,layer,mean,std\n";
    for (const auto& s : summaries)
        for (std::size_t l = 0; l < s.mean.size(); ++l)
            out << s.group_key() << ',' << l << ',' << fmt_double(s.mean[l]) << ',' << fmt_double(s.stddev[l]) << '\n';
}

}  // namespace geohall::evalkit
