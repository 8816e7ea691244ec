#pragma once

#include "adoptkit/centrality.hpp"
#include "adoptkit/dataset.hpp"
#include "adoptkit/temporal_graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace adoptkit {

enum class Level : std::uint8_t { Village, Block, District };

// Four-hour left-closed bins starting 04:00; index into kTimeBinNames.
int time_bin(MinuteOfDay start);
extern const char* const kTimeBinNames[6];

// adoption idx -> screening idx of the attributed screening: the latest
// (date, screening id) attendance of that video by that farmer with
// date <= verification date. The loader guarantees one exists.
std::vector<Idx> attribute_adoptions(const Dataset& ds);

// Days from the farmer's first attended screening to d. Throws
// std::invalid_argument when the farmer has no attendance on or before d.
std::int32_t active_age(const Dataset& ds, Idx farmer, Date d);

// Read-only as-of lookup tables derived once from a dataset. Every query is
// strict: only events dated before d count.
class FeatureContext {
public:
    explicit FeatureContext(const Dataset& ds);

    // (PAI_group, PAI_village): co-adoption neighbors of `farmer` tied
    // strictly before d who adopted `video` strictly before d, filtered to
    // the farmer's group / village.
    std::pair<std::int32_t, std::int32_t> pai(const TemporalGraph& g2, Idx farmer, Idx video,
                                              Date d) const;

    // 1 / (#distinct videos screened strictly before d in the unit holding
    // `village` * unit farmer population); 0 when nothing was screened yet.
    double content_specificity(Idx village, Level level, Date d) const;

    // Sum over the video's distinct title words of prior same-state adoption
    // counts, divided by the count of prior same-state screenings of the
    // video; 0 when it was never screened there before d.
    double title_adoption(Idx video, Idx state, Date d) const;

private:
    static std::uint64_t key2(Idx a, Idx b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    }

    const Dataset* ds_;
    // (village, video) -> adoptions sorted by (verification date, farmer)
    std::unordered_map<std::uint64_t, std::vector<std::pair<Date, Idx>>> village_video_adopters_;
    // per unit: first-screening dates of distinct videos, sorted
    std::vector<std::vector<Date>> village_vs_, block_vs_, district_vs_;
    // (state, video) -> screening dates, sorted
    std::unordered_map<std::uint64_t, std::vector<Date>> state_video_screenings_;
    std::vector<std::string> vocab_; // sorted distinct title words
    // [state][word] -> adoption verification dates, sorted
    std::vector<std::vector<std::vector<Date>>> state_word_adoptions_;
};

struct FeatureMatrix {
    std::vector<std::string> names; // feature columns, stable order
    std::size_t rows = 0, cols = 0;
    std::vector<double> x; // row-major
    std::vector<std::int8_t> label;

    // row metadata, parallel to x's rows
    std::vector<Date> date;
    std::vector<Idx> screening, farmer, video;

    std::uint64_t cs_zero_rows = 0;   // rows where an undefined CS was emitted as 0
    std::uint64_t eigen_failures = 0; // snapshots whose power iteration hit max_iter

    double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
    std::size_t col(std::string_view name) const; // throws on unknown name
};

std::vector<std::string> feature_names(const Dataset& ds);

// One labeled row per attendance event, ordered by (date, screening id,
// farmer id). Everything except the label is computed from events strictly
// before the row's date; the label alone may look forward.
FeatureMatrix build_matrix(const Dataset& ds, int threads = 1, std::size_t attendee_cap = 500);

// Feature values (no label) for one attendance event, rebuilt from scratch.
// Matches the corresponding build_matrix row exactly; exists so tests can
// probe the as-of guarantee against edited datasets cheaply.
std::vector<double> compute_single_row(const Dataset& ds, Idx screening, Idx farmer);

// CSV: date, screening_id, farmer_id, video_id, <features...>, label.
void write_matrix_csv(const std::string& path, const Dataset& ds, const FeatureMatrix& m);
std::string matrix_to_csv(const Dataset& ds, const FeatureMatrix& m);

// Column names, one-hot catalogues, and the as-of convention; written next
// to the CSV so a matrix round-trips without the dataset.
nlohmann::json matrix_header(const Dataset& ds, const FeatureMatrix& m);

// Inverse of write_matrix_csv + matrix_header. Ids that cannot be resolved
// are kept as -1 idxs; feature values and labels round-trip exactly.
FeatureMatrix read_matrix_csv(const std::string& csv_text, const nlohmann::json& header);

} // namespace adoptkit
