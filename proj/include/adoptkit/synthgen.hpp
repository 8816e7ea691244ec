#pragma once

#include "adoptkit/dataset.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace adoptkit {

// Generator configuration. Entity counts are exact; the adoption model is
// a logistic draw per attendance event on the true as-of-date quantities,
// with mildly saturating transforms on the count-like terms:
//
//   z = intercept
//     + beta_pai_village * sqrt(pai_village)
//     + beta_pai_group   * sqrt(pai_group)
//     + beta_ma          * ma
//     + beta_duration    * duration_minutes
//     + beta_cs          * cs_village
//     + beta_ta          * log1p(ta)
//     + beta_gender_gap  * [farmer is a woman]
//     + beta_village_size * village_size
//     + beta_group_size   * group_size
//     + noise,   noise ~ Normal(0, noise_scale)
//
//   adopt ~ Bernoulli(sigmoid(z)), first success per (farmer, video) becomes
//   an adoption verified 10-20 days later.
struct SynthConfig {
    std::uint64_t seed = 42;

    std::int32_t states = 5;
    std::int32_t districts = 10;
    std::int32_t blocks = 20;
    std::int32_t villages = 50;
    std::int32_t groups = 820;
    std::int32_t farmers = 10000;
    std::int32_t mediators = 100;
    std::int32_t videos = 300;
    std::int32_t screenings = 9600;
    std::int32_t languages = 6;

    Date date_start = days_from_civil(2016, 1, 1);
    Date date_end = days_from_civil(2019, 12, 31);

    double group_size_mean = 12.24;
    double group_size_sd = 6.05;
    std::int32_t group_size_min = 2;

    double woman_fraction = 0.55;
    double mediator_woman_fraction = 0.30;
    double attendance_rate = 0.85;

    double beta_pai_village = 0.8;
    double beta_pai_group = 0.4;
    double beta_ma = 5.0;
    double beta_duration = -0.10;
    double beta_cs = 800.0;
    double beta_ta = 0.3;
    double beta_gender_gap = -0.25;
    double beta_village_size = -0.003;
    double beta_group_size = -0.015;
    double intercept = 0.2;
    double noise_scale = 0.5;

    static SynthConfig from_json(const nlohmann::json& j); // rejects unknown keys
    nlohmann::json to_json() const;
    void validate() const; // throws std::invalid_argument
};

// One record per attendance event with the generator's own view of the
// quantities entering the adoption draw. `adopted` is the raw Bernoulli
// outcome (logged even when the farmer had already adopted the video).
struct LatentRow {
    Idx screening = -1, farmer = -1, video = -1;
    Date date = kDateNone;
    std::int32_t pai_village = 0, pai_group = 0;
    double ma = 0.0, duration = 0.0, cs_village = 0.0, ta = 0.0;
    std::int32_t woman = 0;
    double village_size = 0.0, group_size = 0.0;
    double noise = 0.0, logit = 0.0, prob = 0.0;
    std::int32_t adopted = 0;
};

struct SynthResult {
    Dataset dataset;
    std::vector<LatentRow> latents; // ordered by (date, screening_id, farmer_id)
};

SynthResult generate_synthetic(const SynthConfig& cfg);

// Sidecar serialization, ordered like `latents`.
std::string latents_to_csv(const Dataset& ds, const std::vector<LatentRow>& rows);

} // namespace adoptkit
