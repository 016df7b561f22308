#include "irradcast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "irradcast/error.hpp"
#include "irradcast/text.hpp"

namespace irradcast::evaluate {

namespace {

std::vector<std::string_view> data_lines(std::string_view csv) {
    std::vector<std::string_view> out;
    for (auto line : text::lines(csv)) {
        line = text::trim(line);
        if (line.empty() || line.front() == '#') continue;
        out.push_back(line);
    }
    return out;
}

int parse_horizon(std::string_view s, std::size_t line) {
    if (s == "mean") return 0;
    const auto v = text::parse_int(s);
    if (!v || *v < 1) throw ParseError(line, "bad horizon '" + std::string(s) + "'");
    return static_cast<int>(*v);
}

double parse_value(std::string_view s, std::size_t line) {
    const auto v = text::parse_double(s);
    if (!v) throw ParseError(line, "bad number '" + std::string(s) + "'");
    return *v;
}

std::string fmt(double v) { return text::format_fixed(v, 6); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double kt_to_ghi(double kt, double ghi_clear) { return std::max(0.0, kt * ghi_clear); }

double rmse(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size())
        throw ShapeError("rmse inputs differ in length: " + std::to_string(truth.size()) + " vs " +
                         std::to_string(pred.size()));
    if (truth.empty()) throw ShapeError("rmse needs at least one value");
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return std::sqrt(s / static_cast<double>(truth.size()));
}

std::vector<HorizonScore> persistence_baseline(const dataset::WindowedDataset& ds) {
    std::vector<HorizonScore> out;
    for (std::size_t j = 0; j < ds.horizons.size(); ++j) {
        std::vector<double> t, p, tg, pg;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double clear = ds.ghi_clear.at(i, j);
            t.push_back(ds.targets.at(i, j));
            p.push_back(ds.last_kt[i]);
            tg.push_back(kt_to_ghi(t.back(), clear));
            pg.push_back(kt_to_ghi(p.back(), clear));
        }
        out.push_back({ds.horizons[j], rmse(t, p), rmse(tg, pg)});
    }
    return out;
}

// --- literature ---------------------------------------------------------------

const LiteratureRow* LiteratureTable::find(std::string_view code, int year, int horizon_h) const {
    for (const auto& r : rows)
        if (r.code == code && r.year == year && r.horizon_h == horizon_h) return &r;
    return nullptr;
}

std::vector<std::string> LiteratureTable::codes() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
        if (std::find(out.begin(), out.end(), r.code) == out.end()) out.push_back(r.code);
    return out;
}

LiteratureTable parse_literature_table(std::string_view csv) {
    const auto lines = data_lines(csv);
    if (lines.empty() || lines[0] != "site,code,test_year,horizon_h,rnn_wm2,ml_wm2")
        throw ParseError(1, "unexpected literature table header");
    LiteratureTable t;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto f = text::split(lines[n], ',');
        if (f.size() != 6) throw ParseError(n + 1, "expected 6 fields");
        LiteratureRow r;
        r.site = std::string(f[0]);
        r.code = std::string(f[1]);
        r.year = static_cast<int>(parse_value(f[2], n + 1));
        r.horizon_h = parse_horizon(f[3], n + 1);
        r.rnn_wm2 = parse_value(f[4], n + 1);
        r.ml_wm2 = parse_value(f[5], n + 1);
        t.rows.push_back(r);
    }
    return t;
}

std::vector<MeanCheck> check_stated_means(const LiteratureTable& table, double tolerance) {
    std::vector<MeanCheck> out;
    for (const auto& stated : table.rows) {
        if (stated.horizon_h != 0) continue;
        std::vector<double> rnn, ml;
        for (const auto& r : table.rows)
            if (r.code == stated.code && r.year == stated.year && r.horizon_h != 0) {
                rnn.push_back(r.rnn_wm2);
                ml.push_back(r.ml_wm2);
            }
        if (rnn.empty()) continue;
        for (const auto& [column, values, value] :
             {std::tuple{"rnn", rnn, stated.rnn_wm2}, std::tuple{"ml", ml, stated.ml_wm2}}) {
            MeanCheck c{stated.code, column, value, mean_of(values), false};
            c.flagged = std::abs(c.stated - c.computed) > tolerance;
            out.push_back(c);
        }
    }
    return out;
}

LiteratureAggregates literature_aggregates(const LiteratureTable& table, int year) {
    std::vector<double> rnn, ml;
    for (const auto& r : table.rows)
        if (r.year == year && r.horizon_h == 0) {
            rnn.push_back(r.rnn_wm2);
            ml.push_back(r.ml_wm2);
        }
    if (rnn.empty()) throw ReportError("literature table has no mean rows for " + std::to_string(year));
    LiteratureAggregates a;
    a.rnn_average = mean_of(rnn);
    a.ml_average = mean_of(ml);
    a.improvement = relative_improvement(a.ml_average, a.rnn_average);
    return a;
}

double relative_improvement(double baseline, double ours) { return (baseline - ours) / baseline; }

std::vector<MultiHorizonRow> parse_multi_horizon_table(std::string_view csv) {
    const auto lines = data_lines(csv);
    if (lines.empty() || lines[0] != "site,code,test_year,horizon_h,arch,rmse_kt,anomaly")
        throw ParseError(1, "unexpected multi-horizon table header");
    std::vector<MultiHorizonRow> out;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        const auto f = text::split(lines[n], ',');
        if (f.size() != 7) throw ParseError(n + 1, "expected 7 fields");
        MultiHorizonRow r;
        r.site = std::string(f[0]);
        r.code = std::string(f[1]);
        r.year = static_cast<int>(parse_value(f[2], n + 1));
        r.horizon_h = parse_horizon(f[3], n + 1);
        r.arch = std::string(f[4]);
        r.rmse_kt = parse_value(f[5], n + 1);
        r.anomaly = f[6] == "1";
        out.push_back(r);
    }
    return out;
}

// --- reports --------------------------------------------------------------------

std::vector<ForecastReport> evaluate_model(const checkpoint::Forecaster& model, const dataset::WindowedDataset& test,
                                           std::string_view site, const LiteratureTable* literature) {
    if (test.size() == 0) throw ReportError("no test windows for site " + std::string(site));
    const auto& m = model.manifest;
    if (test.feature_names != m.feature_names || test.seq_len != m.seq_len || test.horizons != m.dataset_horizons)
        throw SchemaError("test split does not match the model's feature schema");
    const auto cols = m.mode.target_columns(test.horizons);
    const nn::Tensor pred = checkpoint::predict_normalized(model, test.inputs);

    std::map<int, std::vector<std::size_t>> by_year;
    for (std::size_t i = 0; i < test.size(); ++i) by_year[year_of(test.window_end[i])].push_back(i);

    std::vector<ForecastReport> out;
    for (const auto& [year, idx] : by_year) {
        ForecastReport rep;
        rep.site = std::string(site);
        rep.test_year = year;
        rep.arch = std::string(nn::to_string(m.arch));
        rep.mode = m.mode.to_string();
        rep.config_fingerprint = m.config_fingerprint;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t c = cols[j];
            std::vector<double> t, p, tg, pg, pp, ppg;
            for (std::size_t i : idx) {
                const double clear = test.ghi_clear.at(i, c);
                t.push_back(test.targets.at(i, c));
                p.push_back(pred.at(i, j));
                pp.push_back(test.last_kt[i]);
                tg.push_back(kt_to_ghi(t.back(), clear));
                pg.push_back(kt_to_ghi(p.back(), clear));
                ppg.push_back(kt_to_ghi(pp.back(), clear));
            }
            ReportRow row;
            row.horizon_h = test.horizons[c];
            row.rmse_kt = rmse(t, p);
            row.rmse_wm2 = rmse(tg, pg);
            row.persistence_rmse_kt = rmse(t, pp);
            row.persistence_rmse_wm2 = rmse(tg, ppg);
            if (literature)
                if (const auto* lit = literature->find(site, year, row.horizon_h)) row.literature_rmse_wm2 = lit->ml_wm2;
            rep.horizons.push_back(row);
        }
        std::vector<double> a, b, c2, d, e;
        bool all_lit = true;
        for (const auto& r : rep.horizons) {
            a.push_back(r.rmse_kt);
            b.push_back(r.rmse_wm2);
            c2.push_back(r.persistence_rmse_kt);
            d.push_back(r.persistence_rmse_wm2);
            if (r.literature_rmse_wm2) e.push_back(*r.literature_rmse_wm2);
            else all_lit = false;
        }
        rep.mean.rmse_kt = mean_of(a);
        rep.mean.rmse_wm2 = mean_of(b);
        rep.mean.persistence_rmse_kt = mean_of(c2);
        rep.mean.persistence_rmse_wm2 = mean_of(d);
        if (all_lit) rep.mean.literature_rmse_wm2 = mean_of(e);
        rep.below_baseline = rep.mean.rmse_kt > rep.mean.persistence_rmse_kt;
        out.push_back(rep);
    }
    return out;
}

BenchmarkSummary benchmark_report(const std::vector<BenchmarkInput>& inputs, const LiteratureTable* literature) {
    std::vector<std::string> absent;
    for (const auto& in : inputs)
        if (!in.best || !in.test) absent.push_back(in.site);
    if (!absent.empty()) throw ReportError("no trained checkpoint for site(s): " + text::join(absent, ", "));
    if (inputs.empty()) throw ReportError("no sites requested");

    BenchmarkSummary s;
    for (const auto& in : inputs) {
        auto reps = evaluate_model(*in.best, *in.test, in.site, literature);
        ModelSummary ms;
        ms.site = in.site;
        ms.best_epoch = in.best->manifest.epoch;
        ms.best_test_mse = in.best->manifest.test_mse;
        std::vector<double> kt;
        for (const auto& r : reps) kt.push_back(r.mean.rmse_kt);
        ms.best_mean_rmse_kt = mean_of(kt);
        if (in.final) {
            ms.final_test_mse = in.final->manifest.test_mse;
            std::vector<double> fk;
            for (const auto& r : evaluate_model(*in.final, *in.test, in.site, literature)) fk.push_back(r.mean.rmse_kt);
            ms.final_mean_rmse_kt = mean_of(fk);
        }
        s.models.push_back(ms);
        for (auto& r : reps) s.reports.push_back(std::move(r));
    }
    std::vector<double> ours, lit;
    for (const auto& r : s.reports) {
        ours.push_back(r.mean.rmse_wm2);
        if (r.mean.literature_rmse_wm2) lit.push_back(*r.mean.literature_rmse_wm2);
    }
    s.overall_mean_rmse_wm2 = mean_of(ours);
    if (!lit.empty() && lit.size() == ours.size()) {
        s.literature_mean_rmse_wm2 = mean_of(lit);
        s.improvement = relative_improvement(*s.literature_mean_rmse_wm2, s.overall_mean_rmse_wm2);
    }
    return s;
}

std::string report_csv_header() {
    return "site,test_year,arch,mode,horizon_h,rmse_kt,rmse_wm2,persistence_rmse_kt,persistence_rmse_wm2,"
           "literature_rmse_wm2\n";
}

std::string to_csv(const BenchmarkSummary& summary) {
    std::string out = report_csv_header();
    for (const auto& rep : summary.reports) {
        auto emit = [&](const ReportRow& r, const std::string& h) {
            out += rep.site + "," + std::to_string(rep.test_year) + "," + rep.arch + "," + rep.mode + "," + h + "," +
                   fmt(r.rmse_kt) + "," + fmt(r.rmse_wm2) + "," + fmt(r.persistence_rmse_kt) + "," +
                   fmt(r.persistence_rmse_wm2) + "," + (r.literature_rmse_wm2 ? fmt(*r.literature_rmse_wm2) : "") +
                   "\n";
        };
        for (const auto& r : rep.horizons) emit(r, std::to_string(r.horizon_h));
        emit(rep.mean, "mean");
    }
    return out;
}

std::string summary_text(const BenchmarkSummary& s) {
    std::string out;
    out += "overall_mean_rmse_wm2 = " + fmt(s.overall_mean_rmse_wm2) + "\n";
    out += "literature_mean_rmse_wm2 = " + (s.literature_mean_rmse_wm2 ? fmt(*s.literature_mean_rmse_wm2) : "") + "\n";
    out += "improvement = " + (s.improvement ? fmt(*s.improvement) : "") + "\n";
    std::vector<std::string> below;
    for (const auto& r : s.reports)
        if (r.below_baseline) below.push_back(r.site + "/" + std::to_string(r.test_year));
    out += "below_baseline = " + text::join(below, ",") + "\n";
    for (const auto& m : s.models) {
        out += m.site + ".best_epoch = " + std::to_string(m.best_epoch) + "\n";
        out += m.site + ".best_test_mse = " + fmt(m.best_test_mse) + "\n";
        out += m.site + ".best_mean_rmse_kt = " + fmt(m.best_mean_rmse_kt) + "\n";
        if (m.final_test_mse) out += m.site + ".final_test_mse = " + fmt(*m.final_test_mse) + "\n";
        if (m.final_mean_rmse_kt) out += m.site + ".final_mean_rmse_kt = " + fmt(*m.final_mean_rmse_kt) + "\n";
    }
    return out;
}

std::string plot_csv(const BenchmarkSummary& summary) {
    std::string out = "site,test_year,arch,mode,horizon_h,series,rmse_wm2\n";
    for (const auto& rep : summary.reports) {
        const std::string prefix = rep.site + "," + std::to_string(rep.test_year) + "," + rep.arch + "," + rep.mode + ",";
        for (const auto& r : rep.horizons) {
            const std::string h = std::to_string(r.horizon_h) + ",";
            out += prefix + h + "model," + fmt(r.rmse_wm2) + "\n";
            out += prefix + h + "persistence," + fmt(r.persistence_rmse_wm2) + "\n";
            if (r.literature_rmse_wm2) out += prefix + h + "literature," + fmt(*r.literature_rmse_wm2) + "\n";
        }
    }
    return out;
}

}  // namespace irradcast::evaluate
