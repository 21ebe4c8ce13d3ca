#include "geohall/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "geohall/error.hpp"
#include "geohall/pnorm.hpp"

namespace geohall::pipeline {

std::size_t worker_count() {
    if (const char* env = std::getenv("GEOHALL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr error;
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SpanMode parse_span_mode(std::string_view s) {
    if (s == "full") return SpanMode::full;
    if (s == "answer") return SpanMode::answer;
    throw UsageError("unknown span mode '" + std::string(s) + "' (expected full or answer)");
}

std::vector<trace::TraceManifestEntry> mock_extract_all(const corpus::Dataset& dataset, const mocklm::MockConfig& config,
                                                        const std::filesystem::path& trace_dir,
                                                        const ExtractOptions& options) {
    config.validate();
    std::vector<trace::TraceManifestEntry> entries(dataset.records.size());
    std::error_code ec;
    std::filesystem::create_directories(trace_dir, ec);
    if (ec) throw IoError("cannot create " + trace_dir.string() + ": " + ec.message());

    parallel_for(dataset.records.size(), options.workers, [&](std::size_t i) {
        const auto& rec = dataset.records[i];
        auto out = mocklm::mock_extract(rec, config);
        if (options.payload == trace::PayloadKind::gram) out.trace = trace::to_gram(out.trace);
        auto entry = trace::write_trace(out.trace, trace_dir, options.dtype);
        entry.answer_token_span = out.answer_token_span;
        entry.labels = rec;
        entries[i] = std::move(entry);
    });

    trace::ManifestWriter writer(trace_dir);
    for (const auto& e : entries) writer.append(e);
    return entries;
}

std::vector<geostats::LayerStatProfile> compute_stats(std::span<const trace::TraceManifestEntry> entries,
                                                      const std::filesystem::path& trace_dir,
                                                      std::span<const geostats::Statistic> statistics, SpanMode span,
                                                      std::size_t workers) {
    std::vector<std::vector<geostats::LayerStatProfile>> per_entry(entries.size());
    parallel_for(entries.size(), workers, [&](std::size_t i) {
        const auto& e = entries[i];
        std::optional<geostats::Span> s;
        if (span == SpanMode::answer) {
            if (e.answer_token_span.empty()) return;
            s = geostats::Span{e.answer_token_span.start, e.answer_token_span.end};
        }
        const auto tr = trace::read_trace(e, trace_dir);
        try {
            per_entry[i] = geostats::stats_profiles(tr, statistics, s);
        } catch (const NumericalError& ex) {
            throw NumericalError(e.record_id + ": " + ex.what());
        }
    });
    std::vector<geostats::LayerStatProfile> out;
    for (auto& v : per_entry)
        for (auto& p : v) out.push_back(std::move(p));
    return out;
}

std::vector<geostats::LayerStatProfile> normalize_all(std::span<const trace::TraceManifestEntry> entries,
                                                      std::span<const geostats::LayerStatProfile> profiles) {
    std::map<std::string, std::vector<const trace::TraceManifestEntry*>> siblings;
    for (const auto& e : entries)
        if (e.labels.parent_id) siblings[*e.labels.parent_id].push_back(&e);

    std::map<std::string, std::vector<const geostats::LayerStatProfile*>> by_record;
    for (const auto& p : profiles) by_record[p.record_id].push_back(&p);
    auto find_profile = [&](const std::string& id, const std::string& stat) -> const geostats::LayerStatProfile* {
        const auto it = by_record.find(id);
        if (it == by_record.end()) return nullptr;
        for (const auto* p : it->second)
            if (p->statistic == stat) return p;
        return nullptr;
    };

    std::vector<geostats::LayerStatProfile> out;
    for (const auto& e : entries) {
        if (e.labels.is_perturbation()) continue;
        const auto sib = siblings.find(e.record_id);
        if (sib == siblings.end()) continue;
        const auto bit = by_record.find(e.record_id);
        if (bit == by_record.end()) continue;
        for (const auto* base : bit->second) {
            pnorm::PerturbationGroup g;
            g.base = *base;
            for (const auto* s : sib->second) {
                const auto* sp = find_profile(s->record_id, base->statistic);
                if (sp == nullptr)
                    throw DataError("normalize: sibling " + s->record_id + " has no " + base->statistic + " profile");
                g.siblings.push_back(*sp);
                g.offsets.push_back(*s->labels.perturbation_offset);
            }
            out.push_back(pnorm::normalize_profile(g));
        }
    }
    return out;
}

std::vector<evalkit::LabeledProfile> label_profiles(std::span<const trace::TraceManifestEntry> entries,
                                                    std::span<const geostats::LayerStatProfile> profiles) {
    std::map<std::string, const corpus::PRRecord*> labels;
    for (const auto& e : entries) labels[e.record_id] = &e.labels;
    std::vector<evalkit::LabeledProfile> out;
    out.reserve(profiles.size());
    for (const auto& p : profiles) {
        const auto it = labels.find(p.record_id);
        if (it == labels.end()) throw DataError("profile for " + p.record_id + " has no manifest entry");
        const auto& r = *it->second;
        out.push_back({p, corpus::dataset_domain(r.record_id), r.hall_type, r.level, r.is_perturbation()});
    }
    return out;
}

}  // namespace geohall::pipeline
