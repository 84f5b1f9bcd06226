#include "shortlist/json_codec.hpp"

#include <stdexcept>

namespace shortlist {

using nlohmann::json;

json to_json(const Rational& value) {
    return json{{"num", value.numerator().str()},
                {"den", value.denominator().str()},
                {"decimal", value.to_decimal(kDecimalDigits)}};
}

Rational rational_from_json(const json& j) {
    if (!j.is_object() || !j.contains("num") || !j.contains("den") || !j["num"].is_string() ||
        !j["den"].is_string()) {
        throw std::invalid_argument("rational must be an object with string fields num and den");
    }
    try {
        return Rational(BigInt(j["num"].get<std::string>()), BigInt(j["den"].get<std::string>()));
    } catch (const std::domain_error& e) {
        throw std::invalid_argument(e.what());
    } catch (const std::runtime_error& e) {
        // cpp_int reports unparsable digits this way
        throw std::invalid_argument(e.what());
    }
}

namespace {

json rationals(const std::vector<Rational>& values) {
    json out = json::array();
    for (const auto& v : values) {
        out.push_back(to_json(v));
    }
    return out;
}

} // namespace

json to_json(const ProtocolReport& r) {
    return json{{"n", r.n},
                {"k", r.k},
                {"expected_chooser", to_json(r.expected_chooser)},
                {"expected_proposer", to_json(r.expected_proposer)},
                {"expected_total", to_json(r.expected_total)},
                {"fairness_gap", to_json(r.fairness_gap)},
                {"chooser_second_moment", to_json(r.chooser_second_moment)},
                {"proposer_second_moment", to_json(r.proposer_second_moment)},
                {"second_moment_diff", to_json(r.second_moment_diff)},
                {"variance_diff", to_json(r.variance_diff)},
                {"sigma_bound", r.sigma_bound}};
}

json to_json(const MultiPartyReport& r) {
    return json{{"expected_rank", rationals(r.expected_rank)},
                {"expected_total", to_json(r.expected_total)},
                {"ideal_common_rank", r.ideal_common_rank}};
}

json to_json(const OracleResult& r) {
    return json{{"n", r.n}, {"total_sum", r.total_sum.str()}, {"expectation", to_json(r.expectation)}};
}

json to_json(const SimulationSummary& s) {
    json out{{"seed", std::to_string(s.seed)},
             {"trials", s.trials},
             {"mean_rank", s.mean_rank},
             {"standard_error", s.standard_error},
             {"mean_total", s.mean_total},
             {"standard_error_total", s.standard_error_total}};
    if (s.mean_abs_diff) {
        out["mean_abs_diff"] = *s.mean_abs_diff;
        out["standard_error_abs_diff"] = *s.standard_error_abs_diff;
        out["second_moment_diff"] = *s.second_moment_diff;
        out["standard_error_second_moment_diff"] = *s.standard_error_second_moment_diff;
    }
    return out;
}

json to_json(const SessionState& state) {
    json menu = json::array();
    for (const auto& item : state.menu.items()) {
        menu.push_back({{"id", item.id}, {"label", item.label}});
    }
    json history = json::array();
    for (const auto& h : state.history) {
        history.push_back({{"participant_index", h.participant}, {"item_ids", h.items}, {"timestamp", h.timestamp}});
    }
    json current = nullptr;
    if (state.turn >= 1) {
        current = state.participants[static_cast<std::size_t>(state.turn - 1)];
    }
    return json{{"session_id", state.id},
                {"status", to_string(state.status)},
                {"menu", std::move(menu)},
                {"participants", state.participants},
                {"schedule", state.schedule.sizes()},
                {"turn", state.turn},
                {"current_participant", std::move(current)},
                {"required_count", state.required_count()},
                {"offered", state.offered},
                {"history", std::move(history)},
                {"final_choice", state.final_choice ? json(*state.final_choice) : json(nullptr)}};
}

json to_json(const SessionReport& r) {
    json out{{"session_id", r.session_id},
             {"schedule", r.schedule.sizes()},
             {"final_choice", r.final_choice},
             {"expected_rank", rationals(r.expected.expected_rank)},
             {"expected_total", to_json(r.expected.expected_total)},
             {"realized_rank", nullptr},
             {"realized_total", nullptr}};
    if (r.realized_rank) {
        out["realized_rank"] = *r.realized_rank;
        out["realized_total"] = *r.realized_total;
    }
    return out;
}

json two_party_analysis(std::int64_t n, std::optional<std::int64_t> k) {
    TwoPartyParams{n, k.value_or(1)}.validate();
    const OptimalK best = optimal_integer_k(n);
    const std::int64_t used = k.value_or(best.canonical());
    json out = to_json(second_moments({n, used}));
    out["k_used"] = used;
    out["k_source"] = k ? "given" : "optimal";
    out["optimal_k"] = best.candidates;
    out["optimal_expected_total"] = to_json(best.expected_total);
    out["ideal_k"] = ideal_k(n);
    return out;
}

json schedule_analysis(std::int64_t n, std::int64_t s) {
    const IntegerSchedule best = integer_schedule(n, s);
    json out = to_json(best.report);
    out["n"] = n;
    out["s"] = s;
    out["sizes"] = best.schedule.sizes();
    out["real_sizes"] = real_schedule(n, s);
    return out;
}

} // namespace shortlist
