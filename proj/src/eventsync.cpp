#include "ticksync/eventsync.hpp"

#include <cmath>
#include <cstdlib>

#include "fft.hpp"
#include "ticksync/errors.hpp"

namespace ticksync {

namespace {

void check_inputs(const TickEventSeries& f, const AnchoredBinarySeries& g) {
    if (f.horizon() == 0 || g.size() == 0) throw EmptySeries("both series must be non-empty");
    if (!(f.rate() == g.rate()))
        throw RateMismatch("event series and binary series must share a rate; resample first");
}

// The transform path becomes memory-bound past this; the reference path is
// exact at any size, just slower.
constexpr std::int64_t kMaxFastLength = std::int64_t{1} << 26;

} // namespace

ScoreProfile brute_force_profile(const TickEventSeries& f, const AnchoredBinarySeries& g) {
    check_inputs(f, g);
    const std::int64_t m_len = f.horizon();
    const std::int64_t n_len = g.size();

    ScoreProfile profile;
    profile.first_shift = -(m_len - 1);
    profile.counts.assign(static_cast<std::size_t>(m_len + n_len - 1), 0);

    std::vector<std::int64_t> press_indices;
    press_indices.reserve(static_cast<std::size_t>(n_len));
    for (std::int64_t n = 0; n < n_len; ++n)
        if (g.bits()[static_cast<std::size_t>(n)]) press_indices.push_back(n);

    // Every (fire tick, press index) pair scores at exactly one shift.
    for (std::int64_t m : f.event_ticks())
        for (std::int64_t n : press_indices)
            ++profile.counts[static_cast<std::size_t>(n - m - profile.first_shift)];
    return profile;
}

ScoreProfile fast_profile(const TickEventSeries& f, const AnchoredBinarySeries& g) {
    check_inputs(f, g);
    const std::int64_t m_len = f.horizon();
    const std::int64_t n_len = g.size();
    if (m_len + n_len - 1 > kMaxFastLength) return brute_force_profile(f, g);

    // With g reversed, correlation becomes plain convolution:
    //   corr(s) = sum_m f_m g_{m+s} = conv(f, rev(g))[N-1-s]
    // so counts[k] (shift s = -(M-1)+k) sits at conv index M+N-2-k.
    std::vector<double> dense_f(static_cast<std::size_t>(m_len), 0.0);
    for (std::int64_t t : f.event_ticks()) dense_f[static_cast<std::size_t>(t)] = 1.0;
    std::vector<double> rev_g(static_cast<std::size_t>(n_len));
    for (std::int64_t n = 0; n < n_len; ++n)
        rev_g[static_cast<std::size_t>(n)] = g.bits()[static_cast<std::size_t>(n_len - 1 - n)];

    const std::vector<double> conv = detail::convolve_real(dense_f, rev_g);

    ScoreProfile profile;
    profile.first_shift = -(m_len - 1);
    profile.counts.resize(conv.size());
    double max_residual = 0.0;
    for (std::size_t k = 0; k < conv.size(); ++k) {
        const double raw = conv[conv.size() - 1 - k];
        const double rounded = std::nearbyint(raw);
        max_residual = std::max(max_residual, std::abs(raw - rounded));
        profile.counts[k] = rounded <= 0.0 ? 0 : static_cast<std::uint64_t>(rounded);
    }
    if (max_residual >= 0.25) return brute_force_profile(f, g);
    return profile;
}

ShiftEstimate estimate_shift(const TickEventSeries& f, const AnchoredBinarySeries& g, int min_events) {
    if (min_events < 1) throw Error("min_events must be positive");
    if (static_cast<std::int64_t>(f.event_ticks().size()) < min_events)
        throw InsufficientEvents("only " + std::to_string(f.event_ticks().size()) +
                                 " events, need at least " + std::to_string(min_events));
    bool any_press = false;
    for (std::uint8_t b : g.bits())
        if (b) { any_press = true; break; }
    if (!any_press) throw NoPresses("binary series contains no presses");

    const ScoreProfile profile = fast_profile(f, g);

    std::size_t best_k = 0;
    std::uint64_t best = 0, runner_up = 0, ties = 0;
    for (std::size_t k = 0; k < profile.counts.size(); ++k) {
        const std::uint64_t c = profile.counts[k];
        if (c > best) {
            runner_up = best;
            best = c;
            best_k = k;
            ties = 1;
        } else if (c == best) {
            ++ties;
            runner_up = best;
        } else if (c > runner_up) {
            runner_up = c;
        }
    }

    ShiftEstimate est;
    est.shift = profile.shift_at(best_k);
    est.match_count = best;
    est.runner_up_count = runner_up;
    est.tie_count = ties;
    est.anchor_utc_of_tick0 = sample_index_to_utc(g, est.shift);
    est.confidence = (ties > 1 || best == 0)
                         ? 0.0
                         : static_cast<double>(best - runner_up) / static_cast<double>(best);
    return est;
}

std::vector<std::pair<std::int64_t, UtcInstant>>
anchor_events(const TickEventSeries& f, const ShiftEstimate& est, const AnchoredBinarySeries& g) {
    std::vector<std::pair<std::int64_t, UtcInstant>> out;
    out.reserve(f.event_ticks().size());
    for (std::int64_t m : f.event_ticks())
        out.emplace_back(m, sample_index_to_utc(g, m + est.shift));
    return out;
}

} // namespace ticksync
