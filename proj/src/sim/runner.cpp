#include "msim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "msim/kernels.hpp"
#include "msim/rng.hpp"

namespace msim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Population build_population(const RunConfig& config, std::uint64_t seed) {
    Population pop;
    const std::size_t n_secs = config.securities.size();
    int next_id = 0;

    // fundamentals first so trader ids are contiguous per kind
    for (std::size_t gi = 0; gi < config.groups.size(); ++gi) {
        const auto& g = config.groups[gi];
        if (g.kind == GroupKind::technical) continue;
        for (std::size_t ti = 0; ti < g.count; ++ti) {
            FundamentalTrader t;
            t.id = next_id++;
            t.side = g.kind == GroupKind::fb ? Side::fb : Side::fs;
            t.cash = g.cash;
            t.positions.assign(n_secs, g.endowment);
            std::mt19937_64 eng(derive_stream(seed, kPopulation, gi, ti));
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            switch (g.utility) {
                case UtilityFn::Family::linear:
                    t.utility = UtilityFn::linear();
                    break;
                case UtilityFn::Family::cara:
                    t.utility = UtilityFn::cara(g.gamma.fixed() ? g.gamma.lo
                                                                : g.gamma.sample(u01(eng)));
                    break;
                case UtilityFn::Family::crra:
                    t.utility = UtilityFn::crra(
                        g.eta.fixed() ? g.eta.lo : g.eta.sample(u01(eng)), g.floor);
                    break;
            }
            pop.fundamentals.push_back(std::move(t));
        }
    }
    for (std::size_t gi = 0; gi < config.groups.size(); ++gi) {
        const auto& g = config.groups[gi];
        if (g.kind != GroupKind::technical) continue;
        for (std::size_t ti = 0; ti < g.count; ++ti) {
            std::mt19937_64 eng(derive_stream(seed, kPopulation, gi, ti));
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            const double eps =
                g.epsilon.fixed() ? g.epsilon.lo : g.epsilon.sample(u01(eng));
            pop.technicals.push_back(TechnicalTrader::make(
                next_id, eps, g.p_buy, g.p_sell, g.p_idle, g.cash, n_secs,
                derive_stream(seed, kRegime, static_cast<std::uint64_t>(next_id))));
            ++next_id;
        }
    }
    return pop;
}

std::vector<double> return_diffs(std::span<const StepRow> rows, bool log_returns) {
    std::vector<double> prices;
    prices.reserve(rows.size());
    std::unique_ptr<bool[]> halted(new bool[rows.size()]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        prices.push_back(rows[i].price);
        halted[i] = rows[i].halted;
    }
    return stats::returns_from_prices(
               prices, std::span<const bool>(halted.get(), rows.size()), log_returns)
        .diffs;
}

void fill_return_stats(StatsBlock& out, std::span<const double> diffs) {
    out.returns_count = diffs.size();
    out.mean = out.stddev = kNaN;
    out.skewness = out.excess_kurtosis = kNaN;
    out.jb_statistic = out.jb_p_value = kNaN;
    out.tail3_frequency = out.tail3_gaussian = kNaN;
    if (diffs.size() < stats::kMinSamples) return;
    const double n = static_cast<double>(diffs.size());
    out.mean = kernels::sum(diffs) / n;
    const auto m = kernels::central_moments(diffs, out.mean);
    out.stddev = std::sqrt(m.m2 / (n - 1.0));
    if (!(m.m2 > 0.0)) return;
    out.skewness = stats::skewness(diffs);
    out.excess_kurtosis = stats::excess_kurtosis(diffs);
    const auto jb = stats::jarque_bera(diffs);
    out.jb_statistic = jb.statistic;
    out.jb_p_value = jb.p_value;
    const auto tail = stats::tail_exceedance(diffs, 3.0);
    out.tail3_frequency = tail.frequency;
    out.tail3_gaussian = tail.gaussian;
}

StatsBlock stats_from_rows(std::span<const StepRow> rows, bool log_returns) {
    StatsBlock out;
    out.returns_mode = log_returns ? "log" : "diff";

    std::vector<Condition> conditions;
    std::vector<double> jump_sizes;
    std::unique_ptr<bool[]> jumps(new bool[rows.size()]);
    conditions.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        conditions.push_back(r.condition);
        jumps[i] = r.jump;
        jump_sizes.push_back(r.jump_size);
        if (r.halted) ++out.halted_steps;
        out.trades_total += r.trades;
        out.bankruptcies_total += r.bankruptcies;
    }

    fill_return_stats(out, return_diffs(rows, log_returns));

    const auto exc = stats::excursions(
        conditions, std::span<const bool>(jumps.get(), rows.size()), jump_sizes);
    out.bubbles = exc.n_bubbles;
    out.depressions = exc.n_depressions;
    out.jumps = exc.n_jumps;
    out.time_fraction_outside = exc.time_fraction_outside;
    for (double j : exc.jump_sizes)
        out.max_abs_jump = std::max(out.max_abs_jump, std::abs(j));
    return out;
}

namespace {

struct AuditAccumulator {
    bool configured = false;
    bool applicable = false;
    std::size_t steps_compared = 0;
    double max_reservation = 0.0;
    double max_clearing = 0.0;
};

}  // namespace

RunRecord run_simulation(const RunConfig& config, std::uint64_t seed) {
    const TimeGrid grid = config.grid();
    const std::size_t n_secs = config.securities.size();
    const auto path = gen_semimartingale_path(grid, config.z0, config.drift, config.sigma,
                                              derive_stream(seed, kUnderlying));
    Population pop = build_population(config, seed);

    // Union of payoff mark dates; securities expire at the horizon by default,
    // so the support stays nonempty for every clearing step k < n.
    std::vector<std::size_t> all_marks;
    for (const auto& spec : config.securities)
        for (std::size_t m : spec.marks(grid.n_steps)) all_marks.push_back(m);
    std::sort(all_marks.begin(), all_marks.end());
    all_marks.erase(std::unique(all_marks.begin(), all_marks.end()), all_marks.end());

    ReservationSolver solver;

    // E[x] > 0 at issuance (rejection policy; see README).
    {
        const auto scen0 = sample_scenarios(grid, 0, path.z[0], config.drift, config.sigma,
                                            all_marks, config.scenario_count,
                                            derive_stream(seed, kScenario));
        for (const auto& spec : config.securities) {
            const auto est = expected_payoff(spec, scen0);
            if (!(est.mean > 0.0))
                throw ConfigError("security '" + spec.id +
                                  "' has nonpositive conditional expectation at issuance");
        }
    }

    AuditAccumulator audit;
    audit.configured = !config.audit_pairs.empty();
    audit.applicable = audit.configured && config.n_technical() == 0;
    std::vector<PairAudit> pair_audits;
    for (const auto& [ida, idb] : config.audit_pairs)
        pair_audits.push_back({ida, idb, 0.0, 0.0});

    double cash0 = 0.0;
    for (const auto& f : pop.fundamentals) cash0 += f.cash;
    for (const auto& t : pop.technicals) cash0 += t.cash;
    double accrued_total = 0.0;

    RunRecord rec;
    rec.rows.reserve(grid.n_steps);
    std::vector<std::optional<ClearingStepResult>> prev(n_secs);
    std::vector<OrderBookSnapshot> books(n_secs);
    std::vector<std::vector<Trade>> step_trades(n_secs);
    std::vector<std::pair<int, double>> accruals;
    std::size_t solver_failures = 0;
    const ClearParams clear_params{config.kappa};

    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double z_k = path.z[k];

        std::vector<std::size_t> support;
        for (std::size_t m : all_marks)
            if (m > k) support.push_back(m);
        const auto scen =
            sample_scenarios(grid, k, z_k, config.drift, config.sigma, std::move(support),
                             config.scenario_count, derive_stream(seed, kScenario));
        const PayoffMatrix payoffs = build_payoff_matrix(config.securities, scen);

        // regime draws happen every step, bankrupt technicals stay out
        std::size_t n_tb = 0, n_ts = 0;
        double eps_sum = 0.0;
        for (auto& t : pop.technicals) {
            if (!t.alive) continue;
            switch (switch_regime(t)) {
                case Regime::buyer:
                    ++n_tb;
                    eps_sum += t.epsilon;
                    break;
                case Regime::seller:
                    ++n_ts;
                    eps_sum += t.epsilon;
                    break;
                case Regime::idle_flat:
                    break;
            }
        }
        const double eps_bar = (n_tb + n_ts) > 0
                                   ? eps_sum / static_cast<double>(n_tb + n_ts)
                                   : 0.0;

        std::size_t n_fb_alive = 0, n_fs_alive = 0;
        for (const auto& f : pop.fundamentals)
            if (f.alive) (f.side == Side::fb ? n_fb_alive : n_fs_alive) += 1;

        bool step_failed = false;
        for (std::size_t s = 0; s < n_secs && !step_failed; ++s) {
            auto& book = books[s];
            book.bids.clear();
            book.asks.clear();
            book.buys.clear();
            book.sells.clear();
            for (auto& f : pop.fundamentals) {
                if (!f.alive) continue;
                try {
                    if (f.side == Side::fb)
                        book.bids.push_back({f.id, solver.bid(f, s, payoffs).price});
                    else
                        book.asks.push_back({f.id, solver.ask(f, s, payoffs).price});
                } catch (const SolverError&) {
                    step_failed = true;
                    break;
                }
            }
            if (step_failed) break;
            const bool market_open = prev[s].has_value() && prev[s]->has_price;
            if (market_open) {
                for (auto& t : pop.technicals) {
                    if (!t.alive) continue;
                    if (t.regime == Regime::buyer)
                        book.buys.push_back({t.id, quote_buy(t, prev[s]->price)});
                    else if (t.regime == Regime::seller)
                        book.sells.push_back({t.id, quote_sell(t, prev[s]->price)});
                }
            }
        }

        StepRow row;
        row.step = k;
        row.time = grid.time_at(k);
        row.underlying = z_k;
        row.n_fb = n_fb_alive;
        row.n_fs = n_fs_alive;
        row.n_tb = n_tb;
        row.n_ts = n_ts;

        std::size_t bankruptcies = 0;
        if (step_failed) {
            // Solver no-bracket: flagged row, Halted step, no trades (accrual
            // still runs below: consumption flows regardless of the halt).
            // prev becomes the halted carry so the jump rule keys off the
            // recorded previous condition, same as detect_jump.
            ++solver_failures;
            for (std::size_t s = 0; s < n_secs; ++s) {
                ClearingStepResult carry;
                carry.halted = true;
                carry.condition = Condition::halted;
                if (prev[s] && prev[s]->has_price) {
                    carry.has_price = true;
                    carry.price = prev[s]->price;
                }
                prev[s] = std::move(carry);
                step_trades[s].clear();
            }
            row.halted = true;
            row.condition = Condition::halted;
            row.price = prev[0]->has_price ? prev[0]->price : kNaN;
            row.pareto_lo = kNaN;
            row.pareto_hi = kNaN;
        } else {
            for (std::size_t s = 0; s < n_secs; ++s) {
                auto result = clear_step(books[s], prev[s], eps_bar, clear_params);
                step_trades[s] = result.trades;
                prev[s] = std::move(result);
            }
            const auto& r0 = *prev[0];
            row.price = r0.has_price ? r0.price : kNaN;
            row.condition = r0.condition;
            row.halted = r0.halted;
            row.jump = r0.jump;
            row.jump_size = r0.jump_size;
            row.pareto_lo = r0.pareto.lo ? *r0.pareto.lo : kNaN;
            row.pareto_hi = r0.pareto.hi ? *r0.pareto.hi : kNaN;
            row.trades = step_trades[0].size();

            if (audit.applicable) {
                for (std::size_t pi = 0; pi < config.audit_pairs.size(); ++pi) {
                    auto& pa = pair_audits[pi];
                    const std::size_t a = *config.security_index(pa.a);
                    const std::size_t b = *config.security_index(pa.b);
                    const auto& ba = books[a];
                    const auto& bb = books[b];
                    for (std::size_t i = 0; i < ba.bids.size(); ++i)
                        pa.max_reservation_discrepancy =
                            std::max(pa.max_reservation_discrepancy,
                                     std::abs(ba.bids[i].price - bb.bids[i].price));
                    for (std::size_t i = 0; i < ba.asks.size(); ++i)
                        pa.max_reservation_discrepancy =
                            std::max(pa.max_reservation_discrepancy,
                                     std::abs(ba.asks[i].price - bb.asks[i].price));
                    if (prev[a]->has_price && prev[b]->has_price && !prev[a]->halted &&
                        !prev[b]->halted)
                        pa.max_clearing_discrepancy =
                            std::max(pa.max_clearing_discrepancy,
                                     std::abs(prev[a]->price - prev[b]->price));
                }
                ++audit.steps_compared;
            }
        }

        // accrual of the contingent consumption over (t_k, t_{k+1}]
        accruals.clear();
        for (std::size_t s = 0; s < n_secs; ++s) {
            const double inc =
                step_increment(config.securities[s], k + 1, path.z[k], path.z[k + 1]);
            if (inc == 0.0) continue;
            for (const auto& f : pop.fundamentals)
                if (f.alive && f.positions[s] != 0.0)
                    accruals.emplace_back(f.id, f.positions[s] * inc);
            for (const auto& t : pop.technicals)
                if (t.alive && t.positions[s] != 0.0)
                    accruals.emplace_back(t.id, t.positions[s] * inc);
        }
        for (const auto& [id, amount] : accruals) accrued_total += amount;

        bankruptcies = settle_and_bankrupt(step_trades, accruals, pop.fundamentals,
                                           pop.technicals);
        row.bankruptcies = bankruptcies;
        rec.rows.push_back(row);
    }

    double cash_end = 0.0;
    for (const auto& f : pop.fundamentals) cash_end += f.cash;
    for (const auto& t : pop.technicals) cash_end += t.cash;

    rec.summary.config_hash = config.hash();
    rec.summary.seed = seed;
    rec.summary.steps = rec.rows.size();
    rec.summary.security = config.securities[0].id;
    rec.summary.stats = stats_from_rows(rec.rows, config.log_returns);
    rec.summary.solver_failures = solver_failures;
    // relative to the cash scale: absolute 1e-9 is below double resolution
    // once endowments reach ~1e7 numéraire units
    rec.summary.conservation_residual =
        (cash_end - (cash0 + accrued_total)) / std::max(1.0, std::abs(cash0));
    rec.summary.audit.configured = audit.configured;
    rec.summary.audit.applicable = audit.applicable;
    rec.summary.audit.steps_compared = audit.steps_compared;
    for (const auto& pa : pair_audits) {
        rec.summary.audit.max_reservation_discrepancy =
            std::max(rec.summary.audit.max_reservation_discrepancy,
                     pa.max_reservation_discrepancy);
        rec.summary.audit.max_clearing_discrepancy = std::max(
            rec.summary.audit.max_clearing_discrepancy, pa.max_clearing_discrepancy);
    }
    rec.summary.audit.pairs = std::move(pair_audits);
    return rec;
}

// --- persistence -------------------------------------------------------------

const char* const kCsvHeader =
    "step,time,underlying,price,condition,halted,jump,jump_size,"
    "n_fb_active,n_fs_active,n_tb,n_ts,pareto_lo,pareto_hi,trades,bankruptcies";

void write_run_csv(std::ostream& out, std::span<const StepRow> rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.step << ',' << fmt17(r.time) << ',' << fmt17(r.underlying) << ','
            << fmt17(r.price) << ',' << condition_name(r.condition) << ','
            << (r.halted ? 1 : 0) << ',' << (r.jump ? 1 : 0) << ',' << fmt17(r.jump_size)
            << ',' << r.n_fb << ',' << r.n_fs << ',' << r.n_tb << ',' << r.n_ts << ','
            << fmt17(r.pareto_lo) << ',' << fmt17(r.pareto_hi) << ',' << r.trades << ','
            << r.bankruptcies << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double csv_double(const std::string& v, const std::string& src, std::size_t line_no) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
        throw std::runtime_error(src + ":" + std::to_string(line_no) +
                                 ": malformed number '" + v + "'");
    return d;
}

std::size_t csv_size(const std::string& v, const std::string& src, std::size_t line_no) {
    const double d = csv_double(v, src, line_no);
    return static_cast<std::size_t>(d);
}

}  // namespace

std::vector<StepRow> read_run_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error(source_name + ": empty run file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error(source_name + ": unexpected CSV header");
    std::vector<StepRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 16)
            throw std::runtime_error(source_name + ":" + std::to_string(line_no) +
                                     ": expected 16 columns");
        StepRow r;
        r.step = csv_size(f[0], source_name, line_no);
        r.time = csv_double(f[1], source_name, line_no);
        r.underlying = csv_double(f[2], source_name, line_no);
        r.price = csv_double(f[3], source_name, line_no);
        const auto cond = condition_from_name(f[4]);
        if (!cond)
            throw std::runtime_error(source_name + ":" + std::to_string(line_no) +
                                     ": unknown condition '" + f[4] + "'");
        r.condition = *cond;
        r.halted = f[5] == "1";
        r.jump = f[6] == "1";
        r.jump_size = csv_double(f[7], source_name, line_no);
        r.n_fb = csv_size(f[8], source_name, line_no);
        r.n_fs = csv_size(f[9], source_name, line_no);
        r.n_tb = csv_size(f[10], source_name, line_no);
        r.n_ts = csv_size(f[11], source_name, line_no);
        r.pareto_lo = csv_double(f[12], source_name, line_no);
        r.pareto_hi = csv_double(f[13], source_name, line_no);
        r.trades = csv_size(f[14], source_name, line_no);
        r.bankruptcies = csv_size(f[15], source_name, line_no);
        rows.push_back(r);
    }
    if (rows.empty()) throw std::runtime_error(source_name + ": no data rows");
    return rows;
}

std::string serialize_stats_block(const StatsBlock& s, const std::string& prefix) {
    std::ostringstream o;
    o << prefix << "returns.mode = " << s.returns_mode << '\n'
      << prefix << "returns.count = " << s.returns_count << '\n'
      << prefix << "returns.mean = " << fmt17(s.mean) << '\n'
      << prefix << "returns.stddev = " << fmt17(s.stddev) << '\n'
      << prefix << "returns.skewness = " << fmt17(s.skewness) << '\n'
      << prefix << "returns.excess_kurtosis = " << fmt17(s.excess_kurtosis) << '\n'
      << prefix << "returns.jb_statistic = " << fmt17(s.jb_statistic) << '\n'
      << prefix << "returns.jb_p_value = " << fmt17(s.jb_p_value) << '\n'
      << prefix << "returns.tail3.frequency = " << fmt17(s.tail3_frequency) << '\n'
      << prefix << "returns.tail3.gaussian = " << fmt17(s.tail3_gaussian) << '\n'
      << prefix << "excursions.bubbles = " << s.bubbles << '\n'
      << prefix << "excursions.depressions = " << s.depressions << '\n'
      << prefix << "excursions.jumps = " << s.jumps << '\n'
      << prefix << "excursions.time_fraction_outside = " << fmt17(s.time_fraction_outside)
      << '\n'
      << prefix << "excursions.max_abs_jump = " << fmt17(s.max_abs_jump) << '\n'
      << prefix << "steps.halted = " << s.halted_steps << '\n'
      << prefix << "trades.total = " << s.trades_total << '\n'
      << prefix << "bankruptcies.total = " << s.bankruptcies_total << '\n';
    return o.str();
}

std::string serialize_summary(const RunSummary& s) {
    std::ostringstream o;
    char hash_buf[20];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(s.config_hash));
    o << "summary.config_hash = " << hash_buf << '\n'
      << "summary.seed = " << s.seed << '\n'
      << "summary.steps = " << s.steps << '\n'
      << "summary.security = " << s.security << '\n';
    o << serialize_stats_block(s.stats, "");
    o << "solver.failures = " << s.solver_failures << '\n'
      << "conservation.residual = " << fmt17(s.conservation_residual) << '\n'
      << "audit.configured = " << (s.audit.configured ? 1 : 0) << '\n'
      << "audit.applicable = " << (s.audit.applicable ? 1 : 0) << '\n'
      << "audit.steps_compared = " << s.audit.steps_compared << '\n'
      << "audit.max_reservation_discrepancy = "
      << fmt17(s.audit.max_reservation_discrepancy) << '\n'
      << "audit.max_clearing_discrepancy = " << fmt17(s.audit.max_clearing_discrepancy)
      << '\n';
    for (const auto& p : s.audit.pairs) {
        const std::string prefix = "audit.pair." + p.a + ":" + p.b + ".";
        o << prefix << "max_reservation_discrepancy = "
          << fmt17(p.max_reservation_discrepancy) << '\n'
          << prefix << "max_clearing_discrepancy = " << fmt17(p.max_clearing_discrepancy)
          << '\n';
    }
    return o.str();
}

}  // namespace msim
