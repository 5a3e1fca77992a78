#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ticksync/eventsync.hpp"
#include "ticksync/ingest.hpp"
#include "ticksync/timeline.hpp"

namespace ticksync {

enum class Provenance : std::uint8_t { measured, gap, out_of_range };

struct MergedColumn {
    std::string name;
    std::vector<double> values; // NaN wherever provenance is not `measured`
    std::vector<Provenance> prov;
};

/// Every input stream and the anchored game events resampled onto one grid.
/// The grid shares the phase and rate of the anchoring mouse series and
/// spans the union of all source extents. Nothing is interpolated: bins
/// without a source sample are flagged, never filled.
struct MergedDataset {
    UtcInstant grid_start{};
    Rate grid_rate{128};
    std::vector<MergedColumn> columns;

    std::int64_t size() const {
        return columns.empty() ? 0 : static_cast<std::int64_t>(columns[0].values.size());
    }
    const MergedColumn* column(std::string_view name) const;
};

bool operator==(const MergedDataset& a, const MergedDataset& b);

/// Merges sensor streams and the anchored game log. Sensor columns are named
/// `<stream>.<channel>`. Numeric channels land in the nearest grid bin (ties
/// toward the earlier bin; bin collisions keep the sample nearest the bin
/// instant); channels whose valid values are all 0/1 use any-press binning
/// and require the stream rate to be at least the grid rate. Game events
/// become one 0/1 column per name in event_names (all names when empty).
MergedDataset merge(const std::vector<SensorStream>& streams, const GameEventLog& game,
                    const ShiftEstimate& est, const AnchoredBinarySeries& g_meta,
                    const std::vector<std::string>& event_names = {});

struct MatchReport {
    std::uint64_t matched = 0;
    std::vector<std::int64_t> unmatched_fire;
    std::uint64_t spurious_presses = 0;

    friend bool operator==(const MatchReport&, const MatchReport&) = default;
};

/// Which fires land on a pressed sample under the estimate, which do not,
/// and how many presses correspond to no fire at all.
MatchReport match_report(const TickEventSeries& fire, const AnchoredBinarySeries& g,
                         const ShiftEstimate& est);

struct ColumnCoverage {
    std::string name;
    double measured_fraction = 1.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> gap_intervals; // half-open
};

struct CoverageReport {
    std::vector<ColumnCoverage> columns;
    // pair_covered[a][b]: fraction of column a's gap samples where column b
    // is measured; 1.0 when a has no gaps (vacuously covered).
    std::vector<std::vector<double>> pair_covered;
};

CoverageReport coverage_report(const MergedDataset& dataset);

/// CSV: `# sample_period_ns=<int>`, header `timestamp,<col>,...,<col>_prov,...`,
/// provenance cells M/G/O, non-measured value cells empty.
std::string serialize_merged_csv(const MergedDataset& dataset);
MergedDataset parse_merged_csv(std::string_view text);

} // namespace ticksync
