#include "adoptkit/features.hpp"

#include "adoptkit/csv.hpp"
#include "adoptkit/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace adoptkit {

const char* const kTimeBinNames[6] = {"early_morning", "morning", "noon",
                                      "evening",       "night",   "late_night"};

int time_bin(MinuteOfDay start) {
    if (start < 240) return 5;
    return (start - 240) / 240;
}

std::vector<Idx> attribute_adoptions(const Dataset& ds) {
    std::vector<Idx> out(ds.adoptions.size(), -1);
    for (std::size_t i = 0; i < ds.adoptions.size(); ++i) {
        const auto& a = ds.adoptions[i];
        Idx best = -1;
        for (Idx s : ds.farmer_attendance[a.farmer]) {
            const auto& sc = ds.screenings[s];
            if (sc.date > a.verified) break;
            if (sc.video == a.video) best = s; // list is (date, id)-sorted, last match wins
        }
        out[i] = best;
    }
    return out;
}

std::int32_t active_age(const Dataset& ds, Idx farmer, Date d) {
    const auto& att = ds.farmer_attendance[farmer];
    if (att.empty() || ds.screenings[att.front()].date > d)
        throw std::invalid_argument("active_age: farmer " + ds.farmers[farmer].id +
                                    " has no attendance on or before the query date");
    return d - ds.screenings[att.front()].date;
}

FeatureContext::FeatureContext(const Dataset& ds) : ds_(&ds) {
    std::vector<Idx> order(ds.screenings.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Idx a, Idx b) {
        if (ds.screenings[a].date != ds.screenings[b].date)
            return ds.screenings[a].date < ds.screenings[b].date;
        return a < b;
    });

    village_vs_.resize(ds.villages.size());
    block_vs_.resize(ds.blocks.size());
    district_vs_.resize(ds.districts.size());
    std::unordered_set<std::uint64_t> seen_v, seen_b, seen_d;
    for (Idx s : order) {
        const auto& sc = ds.screenings[s];
        const auto& vil = ds.villages[sc.village];
        if (seen_v.insert(key2(sc.village, sc.video)).second)
            village_vs_[sc.village].push_back(sc.date);
        if (seen_b.insert(key2(vil.block, sc.video)).second)
            block_vs_[vil.block].push_back(sc.date);
        if (seen_d.insert(key2(vil.district, sc.video)).second)
            district_vs_[vil.district].push_back(sc.date);
        state_video_screenings_[key2(vil.state, sc.video)].push_back(sc.date);
    }

    for (const auto& v : ds.videos)
        vocab_.insert(vocab_.end(), v.title_words.begin(), v.title_words.end());
    std::sort(vocab_.begin(), vocab_.end());
    vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());

    state_word_adoptions_.assign(ds.states.size(), std::vector<std::vector<Date>>(vocab_.size()));
    for (const auto& a : ds.adoptions) {
        const auto& f = ds.farmers[a.farmer];
        Idx st = ds.villages[f.village].state;
        village_video_adopters_[key2(f.village, a.video)].push_back({a.verified, a.farmer});
        for (const auto& w : ds.videos[a.video].title_words) {
            auto it = std::lower_bound(vocab_.begin(), vocab_.end(), w);
            state_word_adoptions_[st][static_cast<std::size_t>(it - vocab_.begin())].push_back(
                a.verified);
        }
    }
    for (auto& [_, v] : village_video_adopters_) std::sort(v.begin(), v.end());
    for (auto& per_state : state_word_adoptions_)
        for (auto& v : per_state) std::sort(v.begin(), v.end());
}

std::pair<std::int32_t, std::int32_t> FeatureContext::pai(const TemporalGraph& g2, Idx farmer,
                                                          Idx video, Date d) const {
    const Dataset& ds = *ds_;
    auto span = g2.neighbors(farmer);
    if (span.empty()) return {0, 0};
    auto it = village_video_adopters_.find(key2(ds.farmers[farmer].village, video));
    if (it == village_video_adopters_.end()) return {0, 0};
    std::int32_t pg = 0, pv = 0;
    const Idx group = ds.farmers[farmer].group;
    for (const auto& [ad_date, adopter] : it->second) {
        if (ad_date >= d) break;
        auto p = std::lower_bound(span.begin(), span.end(), adopter,
                                  [](const std::pair<Idx, Date>& e, Idx x) { return e.first < x; });
        if (p == span.end() || p->first != adopter || p->second >= d) continue;
        ++pv;
        if (ds.farmers[adopter].group == group) ++pg;
    }
    return {pg, pv};
}

double FeatureContext::content_specificity(Idx village, Level level, Date d) const {
    const Dataset& ds = *ds_;
    const std::vector<Date>* dates = nullptr;
    double pop = 0.0;
    switch (level) {
    case Level::Village:
        dates = &village_vs_[village];
        pop = static_cast<double>(ds.villages[village].farmers.size());
        break;
    case Level::Block:
        dates = &block_vs_[ds.villages[village].block];
        pop = static_cast<double>(ds.blocks[ds.villages[village].block].population);
        break;
    case Level::District:
        dates = &district_vs_[ds.villages[village].district];
        pop = static_cast<double>(ds.districts[ds.villages[village].district].population);
        break;
    }
    auto n = std::lower_bound(dates->begin(), dates->end(), d) - dates->begin();
    if (n == 0 || pop <= 0.0) return 0.0;
    return 1.0 / (static_cast<double>(n) * pop);
}

double FeatureContext::title_adoption(Idx video, Idx state, Date d) const {
    auto it = state_video_screenings_.find(key2(state, video));
    if (it == state_video_screenings_.end()) return 0.0;
    auto s = std::lower_bound(it->second.begin(), it->second.end(), d) - it->second.begin();
    if (s == 0) return 0.0;
    std::int64_t a = 0;
    for (const auto& w : ds_->videos[video].title_words) {
        auto wit = std::lower_bound(vocab_.begin(), vocab_.end(), w);
        if (wit == vocab_.end() || *wit != w) continue;
        const auto& dates = state_word_adoptions_[state][static_cast<std::size_t>(wit - vocab_.begin())];
        a += std::lower_bound(dates.begin(), dates.end(), d) - dates.begin();
    }
    return static_cast<double>(a) / static_cast<double>(s);
}

std::vector<std::string> feature_names(const Dataset& ds) {
    std::vector<std::string> n = {"ma",      "pai_group",  "pai_village", "cs_village",
                                  "cs_block", "cs_district", "ta",          "duration_minutes"};
    for (const auto& l : ds.languages) n.push_back("lang_" + l);
    for (const auto* b : kTimeBinNames) n.push_back(std::string("tod_") + b);
    for (const char* g : {"g1", "g2"})
        for (const char* c : {"closeness", "betweenness", "eigenvector"})
            n.push_back(std::string(g) + "_" + c);
    n.push_back("group_size");
    n.push_back("village_size");
    n.push_back("active_age_days");
    return n;
}

std::size_t FeatureMatrix::col(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw std::invalid_argument("unknown feature column: " + std::string(name));
}

namespace {

// row layout offsets; everything after the fixed block shifts with the
// language catalogue size
struct Layout {
    std::size_t nlang, lang0, tod0, g1c, g2c, gsize, vsize, age, cols;
    explicit Layout(std::size_t languages) {
        nlang = languages;
        lang0 = 8;
        tod0 = lang0 + nlang;
        g1c = tod0 + 6;
        g2c = g1c + 3;
        gsize = g2c + 3;
        vsize = gsize + 1;
        age = vsize + 1;
        cols = age + 1;
    }
};

void fill_row(const Dataset& ds, const FeatureContext& ctx, const Layout& lay,
              const TemporalGraph& g2, const CentralityCache::Entry& g1e,
              const CentralityCache::Entry& g2e, Idx s, Idx f, double* row) {
    const auto& sc = ds.screenings[s];
    const auto& vil = ds.villages[sc.village];
    std::fill(row, row + lay.cols, 0.0);

    row[0] = 1.0 / static_cast<double>(sc.attendees.size());
    auto [pg, pv] = ctx.pai(g2, f, sc.video, sc.date);
    row[1] = pg;
    row[2] = pv;
    row[3] = ctx.content_specificity(sc.village, Level::Village, sc.date);
    row[4] = ctx.content_specificity(sc.village, Level::Block, sc.date);
    row[5] = ctx.content_specificity(sc.village, Level::District, sc.date);
    row[6] = ctx.title_adoption(sc.video, vil.state, sc.date);
    row[7] = ds.videos[sc.video].duration_minutes;

    Idx lang = ds.language_index(ds.videos[sc.video].language);
    if (lang < 0)
        throw ValidationError("video " + ds.videos[sc.video].id +
                              " has a language outside the catalogue");
    row[lay.lang0 + static_cast<std::size_t>(lang)] = 1.0;
    row[lay.tod0 + static_cast<std::size_t>(time_bin(sc.start))] = 1.0;

    CentralityTriple t1 = triple_for(g1e, f);
    CentralityTriple t2 = triple_for(g2e, f);
    row[lay.g1c] = t1.closeness;
    row[lay.g1c + 1] = t1.betweenness;
    row[lay.g1c + 2] = t1.eigenvector;
    row[lay.g2c] = t2.closeness;
    row[lay.g2c + 1] = t2.betweenness;
    row[lay.g2c + 2] = t2.eigenvector;

    row[lay.gsize] = static_cast<double>(ds.groups[ds.farmers[f].group].farmers.size());
    row[lay.vsize] = static_cast<double>(vil.farmers.size());
    row[lay.age] = static_cast<double>(active_age(ds, f, sc.date));
}

std::vector<Idx> screening_order(const Dataset& ds) {
    std::vector<Idx> order(ds.screenings.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Idx a, Idx b) {
        if (ds.screenings[a].date != ds.screenings[b].date)
            return ds.screenings[a].date < ds.screenings[b].date;
        return a < b;
    });
    return order;
}

} // namespace

FeatureMatrix build_matrix(const Dataset& ds, int threads, std::size_t attendee_cap) {
    FeatureMatrix m;
    m.names = feature_names(ds);
    Layout lay(ds.languages.size());
    m.cols = lay.cols;

    auto order = screening_order(ds);
    std::vector<std::size_t> row_offset(ds.screenings.size(), 0);
    std::size_t rows = 0;
    for (Idx s : order) {
        row_offset[static_cast<std::size_t>(s)] = rows;
        rows += ds.screenings[static_cast<std::size_t>(s)].attendees.size();
    }
    m.rows = rows;
    m.x.assign(rows * m.cols, 0.0);
    m.label.assign(rows, 0);
    m.date.resize(rows);
    m.screening.resize(rows);
    m.farmer.resize(rows);
    m.video.resize(rows);

    FeatureContext ctx(ds);
    CentralityCache cache;
    std::vector<std::uint64_t> cs_zero(ds.villages.size(), 0);

    parallel_for(ds.villages.size(), threads, [&](std::size_t v) {
        if (ds.village_screenings[v].empty()) return;
        TemporalGraph g1 = build_coattendance(ds, static_cast<Idx>(v), attendee_cap);
        TemporalGraph g2 = build_coadoption(ds, static_cast<Idx>(v));
        for (Idx s : ds.village_screenings[v]) {
            const auto& sc = ds.screenings[static_cast<std::size_t>(s)];
            const auto& g1e = cache.entry_asof(ds, g1, sc.date);
            const auto& g2e = cache.entry_asof(ds, g2, sc.date);
            std::size_t base = row_offset[static_cast<std::size_t>(s)];
            for (std::size_t i = 0; i < sc.attendees.size(); ++i) {
                Idx f = sc.attendees[i];
                std::size_t r = base + i;
                fill_row(ds, ctx, lay, g2, g1e, g2e, s, f, m.x.data() + r * m.cols);
                if (m.x[r * m.cols + 3] == 0.0 || m.x[r * m.cols + 4] == 0.0 ||
                    m.x[r * m.cols + 5] == 0.0)
                    cs_zero[v] += 1;
                m.date[r] = sc.date;
                m.screening[r] = s;
                m.farmer[r] = f;
                m.video[r] = sc.video;
            }
        }
    });

    for (auto c : cs_zero) m.cs_zero_rows += c;
    m.eigen_failures = cache.eigen_failures();

    auto attributed = attribute_adoptions(ds);
    for (std::size_t i = 0; i < attributed.size(); ++i) {
        Idx s = attributed[i];
        if (s < 0) continue;
        const auto& att = ds.screenings[static_cast<std::size_t>(s)].attendees;
        auto it = std::lower_bound(att.begin(), att.end(), ds.adoptions[i].farmer);
        m.label[row_offset[static_cast<std::size_t>(s)] +
                static_cast<std::size_t>(it - att.begin())] = 1;
    }
    return m;
}

std::vector<double> compute_single_row(const Dataset& ds, Idx screening, Idx farmer) {
    const auto& sc = ds.screenings[static_cast<std::size_t>(screening)];
    if (!std::binary_search(sc.attendees.begin(), sc.attendees.end(), farmer))
        throw std::invalid_argument("compute_single_row: farmer did not attend the screening");
    FeatureContext ctx(ds);
    TemporalGraph g1 = build_coattendance(ds, sc.village);
    TemporalGraph g2 = build_coadoption(ds, sc.village);
    CentralityCache cache;
    const auto& g1e = cache.entry_asof(ds, g1, sc.date);
    const auto& g2e = cache.entry_asof(ds, g2, sc.date);
    Layout lay(ds.languages.size());
    std::vector<double> row(lay.cols, 0.0);
    fill_row(ds, ctx, lay, g2, g1e, g2e, screening, farmer, row.data());
    return row;
}

namespace {

void append_matrix_row(CsvWriter& w, const Dataset& ds, const FeatureMatrix& m, std::size_t r,
                       std::vector<std::string>& fields) {
    fields.clear();
    fields.push_back(format_date(m.date[r]));
    fields.push_back(ds.screenings[static_cast<std::size_t>(m.screening[r])].id);
    fields.push_back(ds.farmers[static_cast<std::size_t>(m.farmer[r])].id);
    fields.push_back(ds.videos[static_cast<std::size_t>(m.video[r])].id);
    for (std::size_t c = 0; c < m.cols; ++c) fields.push_back(format_double(m.at(r, c)));
    fields.push_back(format_int(m.label[r]));
    w.row(fields);
}

std::vector<std::string> csv_columns(const FeatureMatrix& m) {
    std::vector<std::string> cols = {"date", "screening_id", "farmer_id", "video_id"};
    cols.insert(cols.end(), m.names.begin(), m.names.end());
    cols.push_back("label");
    return cols;
}

} // namespace

std::string matrix_to_csv(const Dataset& ds, const FeatureMatrix& m) {
    std::string out;
    CsvWriter w(out);
    w.row(csv_columns(m));
    std::vector<std::string> fields;
    for (std::size_t r = 0; r < m.rows; ++r) append_matrix_row(w, ds, m, r, fields);
    return out;
}

void write_matrix_csv(const std::string& path, const Dataset& ds, const FeatureMatrix& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    std::string buf;
    CsvWriter w(buf);
    w.row(csv_columns(m));
    std::vector<std::string> fields;
    for (std::size_t r = 0; r < m.rows; ++r) {
        append_matrix_row(w, ds, m, r, fields);
        if (buf.size() >= (1u << 22)) {
            os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

nlohmann::json matrix_header(const Dataset& ds, const FeatureMatrix& m) {
    nlohmann::json j;
    j["columns"] = csv_columns(m);
    j["feature_columns"] = m.names;
    j["languages"] = ds.languages;
    std::vector<std::string> bins(kTimeBinNames, kTimeBinNames + 6);
    j["time_bins"] = bins;
    j["rows"] = m.rows;
    j["cs_zero_rows"] = m.cs_zero_rows;
    j["eigen_failures"] = m.eigen_failures;
    j["as_of"] = "features use events dated strictly before the row date; only the label "
                 "may depend on the row date or later";
    return j;
}

FeatureMatrix read_matrix_csv(const std::string& csv_text, const nlohmann::json& header) {
    FeatureMatrix m;
    m.names = header.at("feature_columns").get<std::vector<std::string>>();
    m.cols = m.names.size();
    auto expect = header.at("columns").get<std::vector<std::string>>();

    CsvReader rd(csv_text);
    std::vector<std::string> row;
    if (!rd.next(row) || row != expect)
        throw std::runtime_error("feature csv does not match its header description");
    const std::size_t width = 4 + m.cols + 1;
    while (rd.next(row)) {
        if (row.size() != width) throw std::runtime_error("feature csv: bad row arity");
        auto d = parse_date(row[0]);
        if (!d) throw std::runtime_error("feature csv: bad date " + row[0]);
        m.date.push_back(*d);
        m.screening.push_back(-1);
        m.farmer.push_back(-1);
        m.video.push_back(-1);
        for (std::size_t c = 0; c < m.cols; ++c) {
            double v;
            if (!parse_double(row[4 + c], v))
                throw std::runtime_error("feature csv: bad number " + row[4 + c]);
            m.x.push_back(v);
        }
        std::int64_t lbl;
        if (!parse_int(row[width - 1], lbl) || (lbl != 0 && lbl != 1))
            throw std::runtime_error("feature csv: bad label " + row[width - 1]);
        m.label.push_back(static_cast<std::int8_t>(lbl));
        ++m.rows;
    }
    if (header.contains("rows") && header.at("rows").get<std::size_t>() != m.rows)
        throw std::runtime_error("feature csv: row count differs from header");
    return m;
}

} // namespace adoptkit
