#pragma once

#include "adoptkit/civil_date.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace adoptkit {

enum class Gender : std::uint8_t { Woman, Man, Unspecified };

enum class Strictness { Strict, Lenient };

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense in-memory ids; -1 means unresolved. Row order for every table is the
// lexicographic order of the primary id, which also defines the canonical
// serialization order.
using Idx = std::int32_t;

struct StateRec { std::string id; std::int64_t population = 0; };
struct DistrictRec { std::string id; Idx state = -1; std::int64_t population = 0; };
struct BlockRec { std::string id; Idx district = -1; std::int64_t population = 0; };

struct VillageRec {
    std::string id;
    Idx block = -1;
    Idx district = -1;
    Idx state = -1;
    std::vector<Idx> farmers;
};

struct GroupRec {
    std::string id;
    Idx village = -1;
    std::vector<Idx> farmers;
};

struct FarmerRec {
    std::string id;
    Idx group = -1;
    Idx village = -1;
    Gender gender = Gender::Unspecified;
    Date registered = kDateNone;
};

struct MediatorRec { std::string id; Gender gender = Gender::Unspecified; };

struct VideoRec {
    std::string id;
    std::string title;
    double duration_minutes = 0.0;
    std::string language;
    std::vector<std::string> title_words; // tokenized, lowercased, distinct, sorted
};

struct ScreeningRec {
    std::string id;
    Idx video = -1;
    Idx mediator = -1;
    Idx village = -1;
    Date date = kDateNone;
    MinuteOfDay start = 0;
    std::vector<Idx> attendees; // sorted by farmer idx
};

struct AdoptionRec {
    Idx farmer = -1;
    Idx video = -1;
    Date verified = kDateNone;
};

// Title tokenization: lowercase, split on any non-alphanumeric byte, drop
// tokens shorter than 2, dedupe. Shared by ingestion and the synthesizer.
std::vector<std::string> tokenize_title(std::string_view title);

struct Dataset {
    std::vector<StateRec> states;
    std::vector<DistrictRec> districts;
    std::vector<BlockRec> blocks;
    std::vector<VillageRec> villages;
    std::vector<GroupRec> groups;
    std::vector<FarmerRec> farmers;
    std::vector<MediatorRec> mediators;
    std::vector<VideoRec> videos;
    std::vector<ScreeningRec> screenings;
    std::vector<AdoptionRec> adoptions; // sorted by (farmer, video)

    std::vector<std::string> languages; // sorted distinct catalogue

    // Derived indices (filled by finalize()).
    std::vector<std::vector<Idx>> farmer_attendance;   // screening idxs by (date, id)
    std::vector<std::vector<Idx>> farmer_adoptions;    // adoption idxs by video
    std::vector<std::vector<Idx>> village_screenings;  // screening idxs by (date, id)
    std::vector<std::vector<Idx>> state_screenings;    // screening idxs by (date, id)
    std::vector<std::vector<Idx>> video_adoptions;     // adoption idxs by (date, farmer)
    Date first_event = kDateNone;
    Date last_event = kDateNone;

    std::unordered_map<std::string, Idx> farmer_by_id;
    std::unordered_map<std::string, Idx> village_by_id;
    std::unordered_map<std::string, Idx> group_by_id;
    std::unordered_map<std::string, Idx> mediator_by_id;
    std::unordered_map<std::string, Idx> video_by_id;
    std::unordered_map<std::string, Idx> screening_by_id;

    Idx language_index(std::string_view lang) const; // -1 if absent

    // Rebuilds the derived indices from the primary tables.
    void finalize();
};

struct DropCounts {
    std::uint64_t malformed = 0;           // wrong arity, unparsable field
    std::uint64_t duplicate_key = 0;
    std::uint64_t dangling_reference = 0;
    std::uint64_t bad_value = 0;           // nonpositive duration, empty title, bad enum
    std::uint64_t village_mismatch = 0;    // attendee outside screening village
    std::uint64_t empty_screening = 0;
    std::uint64_t adoption_without_attendance = 0;

    std::uint64_t total() const {
        return malformed + duplicate_key + dangling_reference + bad_value +
               village_mismatch + empty_screening + adoption_without_attendance;
    }
};

struct LoadReport {
    std::map<std::string, DropCounts> dropped;   // per table
    std::map<std::string, std::uint64_t> kept;   // per table
    std::vector<std::string> messages;           // first few drop reasons, for logs
    std::uint64_t total_dropped() const {
        std::uint64_t t = 0;
        for (auto& [_, d] : dropped) t += d.total();
        return t;
    }
};

struct LoadResult {
    Dataset dataset;
    LoadReport report;
};

// Loads the seven-table CSV layout from `dir`. Strict mode throws
// ValidationError on the first violation; lenient mode drops offending rows
// and counts them per reason.
LoadResult load_dataset(const std::string& dir, Strictness strictness);

// Canonical serialization; loading the result reproduces the tables
// byte-identically (rows sorted by primary id, RFC-4180 quoting).
void save_dataset(const Dataset& ds, const std::string& dir);

enum class EventKind : std::uint8_t { Screening = 0, Adoption = 1 };

struct TimelineEvent {
    Date date;
    EventKind kind;
    Idx index; // screening idx or adoption idx
};

// Deterministic whole-dataset event order: date, then screenings before
// adoptions, then screening id / (farmer id, video id).
std::vector<TimelineEvent> event_timeline(const Dataset& ds);

const char* gender_name(Gender g);

} // namespace adoptkit
