#include "emorec/io.h"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace emorec::io {

using nlohmann::json;

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string shortest(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

template <typename T>
T json_get(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) throw SchemaError(context + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw SchemaError(context + ": field '" + key + "' has the wrong type (" + e.what() + ")");
    }
}

json parse_json_file(const fs::path& path) {
    const auto text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
}

}  // namespace

std::string base64_encode(std::span<const unsigned char> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (i + 1 == bytes.size()) {
        const unsigned v = bytes[i] << 16;
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

std::vector<unsigned char> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw ValidationError("base64 payload length is not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + static_cast<std::size_t>(k)];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else {
                v[k] = b64_value(c);
                if (v[k] < 0 || pad > 0) throw ValidationError("invalid base64 character");
            }
        }
        const unsigned word = (static_cast<unsigned>(v[0]) << 18) | (static_cast<unsigned>(v[1]) << 12) |
                              (static_cast<unsigned>(v[2]) << 6) | static_cast<unsigned>(v[3]);
        out.push_back(static_cast<unsigned char>((word >> 16) & 0xFF));
        if (pad < 2) out.push_back(static_cast<unsigned char>((word >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<unsigned char>(word & 0xFF));
    }
    return out;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// --- CSV -------------------------------------------------------------------

std::size_t CsvTable::column(std::string_view name, const std::string& context) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError(context + ": missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text, const std::string& context) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
            table.header = split_line(line);
            continue;
        }
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != table.header.size())
            throw SchemaError(context + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty() || (table.header.size() == 1 && table.header[0].empty()))
        throw SchemaError(context + ": missing header row");
    return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

double parse_double(const std::string& cell, const std::string& context) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
        throw SchemaError(context + ": '" + cell + "' is not a finite number");
    return v;
}

long long parse_int(const std::string& cell, const std::string& context) {
    long long v = 0;
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(cell.data(), last, v);
    if (res.ec != std::errc() || res.ptr != last) throw SchemaError(context + ": '" + cell + "' is not an integer");
    return v;
}

// --- gaze ------------------------------------------------------------------

std::vector<signal::GazeSample> read_gaze_csv(const fs::path& path) {
    const auto table = read_csv(path);
    const auto ctx = path.string();
    const auto ct = table.column("t_ms", ctx), cx = table.column("x", ctx), cy = table.column("y", ctx),
               cp = table.column("pupil_mm", ctx), cv = table.column("valid", ctx);
    std::vector<signal::GazeSample> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = ctx + " row " + std::to_string(r + 2);
        signal::GazeSample s;
        s.t = parse_double(row[ct], where);
        s.x = parse_double(row[cx], where);
        s.y = parse_double(row[cy], where);
        s.pupil = parse_double(row[cp], where);
        const auto& v = row[cv];
        if (v == "1" || v == "true") s.valid = true;
        else if (v == "0" || v == "false") s.valid = false;
        else throw SchemaError(where + ": valid must be 0/1, got '" + v + "'");
        if (s.t < 0.0) throw SchemaError(where + ": negative timestamp");
        if (!out.empty() && s.t < out.back().t) throw SchemaError(where + ": rows are not sorted by t_ms");
        out.push_back(s);
    }
    return out;
}

std::string format_gaze_csv(const std::vector<signal::GazeSample>& stream) {
    std::string out = "t_ms,x,y,pupil_mm,valid\n";
    out.reserve(stream.size() * 40);
    for (const auto& s : stream) {
        out += fixed(s.t, 3);
        out += ',';
        out += fixed(s.x, 3);
        out += ',';
        out += fixed(s.y, 3);
        out += ',';
        out += fixed(s.pupil, 4);
        out += s.valid ? ",1\n" : ",0\n";
    }
    return out;
}

// --- sessions --------------------------------------------------------------

SessionMeta read_session_json(const fs::path& path) {
    const auto j = parse_json_file(path);
    const auto ctx = path.string();
    SessionMeta meta;
    auto& s = meta.session;
    s.participant_id = json_get<std::string>(j, "participant_id", ctx);
    s.sample_rate = j.value("sample_rate", 150.0);
    if (!(s.sample_rate > 0.0)) throw SchemaError(ctx + ": sample_rate must be positive");
    meta.gaze_file = j.value("gaze_file", s.participant_id + ".csv");

    const auto env = json_get<json>(j, "environment", ctx);
    s.environment.lux = json_get<double>(env, "lux", ctx + " environment");
    s.environment.temp = json_get<double>(env, "temp", ctx + " environment");
    if (s.environment.lux < 0.0) throw SchemaError(ctx + ": negative lux");

    if (j.contains("personality")) {
        const auto& pers = j.at("personality");
        for (std::size_t k = 0; k < features::kTraitCount; ++k)
            s.personality.raw[k] =
                json_get<double>(pers, std::string(features::kTraitNames[k]).c_str(), ctx + " personality");
    } else {
        throw SchemaError(ctx + ": missing field 'personality'");
    }

    const auto trials = json_get<json>(j, "trials", ctx);
    if (!trials.is_array()) throw SchemaError(ctx + ": 'trials' must be an array");
    double prev_end = -INFINITY;
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const auto& tj = trials[i];
        const auto tctx = ctx + " trials[" + std::to_string(i) + "]";
        signal::TrialWindow t;
        t.trial_id = json_get<std::string>(tj, "trial_id", tctx);
        t.clip_id = tj.value("clip_id", t.trial_id);
        try {
            t.stimulus_emotion = parse_emotion(json_get<std::string>(tj, "stimulus_emotion", tctx));
        } catch (const SchemaError&) {
            throw;
        } catch (const ValidationError& e) {
            throw SchemaError(tctx + ": " + e.what());
        }
        t.start_t = json_get<double>(tj, "start_t", tctx);
        t.end_t = json_get<double>(tj, "end_t", tctx);
        if (!(t.start_t < t.end_t)) throw SchemaError(tctx + ": start_t must precede end_t");
        if (t.start_t < prev_end) throw SchemaError(tctx + ": trials overlap or are out of order");
        prev_end = t.end_t;
        s.trials.push_back(std::move(t));
    }
    return meta;
}

std::string format_session_json(const signal::SessionRecording& session, const std::string& gaze_file) {
    json j;
    j["participant_id"] = session.participant_id;
    j["sample_rate"] = session.sample_rate;
    j["gaze_file"] = gaze_file;
    j["environment"] = {{"lux", session.environment.lux}, {"temp", session.environment.temp}};
    json pers;
    for (std::size_t k = 0; k < features::kTraitCount; ++k)
        pers[std::string(features::kTraitNames[k])] = session.personality.raw[k];
    j["personality"] = pers;
    json trials = json::array();
    for (const auto& t : session.trials) {
        trials.push_back({{"trial_id", t.trial_id},
                          {"clip_id", t.clip_id},
                          {"stimulus_emotion", std::string(to_string(t.stimulus_emotion))},
                          {"start_t", t.start_t},
                          {"end_t", t.end_t}});
    }
    j["trials"] = trials;
    return j.dump(2) + "\n";
}

signal::SessionRecording load_session(const fs::path& json_path) {
    auto meta = read_session_json(json_path);
    const auto stream = read_gaze_csv(json_path.parent_path() / meta.gaze_file);
    signal::assign_samples(meta.session.trials, stream);
    return std::move(meta.session);
}

std::vector<signal::SessionRecording> load_sessions(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("session directory " + dir.string() + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<signal::SessionRecording> out;
    for (const auto& f : files) out.push_back(load_session(f));
    return out;
}

std::vector<signal::GazeSample> session_stream(const signal::SessionRecording& session) {
    std::vector<signal::GazeSample> stream;
    for (const auto& t : session.trials) {
        for (auto s : t.samples) {
            s.t += t.start_t;
            stream.push_back(s);
        }
    }
    return stream;
}

// --- landmarks -------------------------------------------------------------

std::vector<roi::LandmarkFrame> read_landmarks_json(const fs::path& path) {
    const auto j = parse_json_file(path);
    const auto ctx = path.string();
    if (!j.is_array()) throw SchemaError(ctx + ": landmark file must be an array of frames");
    std::vector<roi::LandmarkFrame> frames;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto fctx = ctx + " frame " + std::to_string(i);
        roi::LandmarkFrame f;
        f.t = json_get<double>(j[i], "t_ms", fctx);
        const auto pts = json_get<json>(j[i], "points", fctx);
        if (!pts.is_array() || pts.size() != roi::kLandmarkCount)
            throw SchemaError(fctx + ": expected exactly 68 points");
        for (std::size_t k = 0; k < roi::kLandmarkCount; ++k) {
            const auto& p = pts[k];
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw SchemaError(fctx + ": point " + std::to_string(k) + " must be [x, y]");
            f.points[k] = {p[0].get<double>(), p[1].get<double>()};
            if (!std::isfinite(f.points[k].x) || !std::isfinite(f.points[k].y))
                throw SchemaError(fctx + ": non-finite coordinate");
        }
        if (!frames.empty() && f.t < frames.back().t) throw SchemaError(fctx + ": frames out of time order");
        frames.push_back(f);
    }
    if (frames.empty()) throw SchemaError(ctx + ": no frames");
    return frames;
}

std::string format_landmarks_json(const std::vector<roi::LandmarkFrame>& frames) {
    // Hand-rolled to keep one frame per line.
    std::string out = "[\n";
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out += "{\"t_ms\":" + fixed(frames[i].t, 3) + ",\"points\":[";
        for (std::size_t k = 0; k < roi::kLandmarkCount; ++k) {
            if (k) out += ',';
            out += '[' + fixed(frames[i].points[k].x, 6) + ',' + fixed(frames[i].points[k].y, 6) + ']';
        }
        out += "]}";
        out += i + 1 < frames.size() ? ",\n" : "\n";
    }
    out += "]\n";
    return out;
}

std::map<std::string, std::vector<roi::LandmarkFrame>> load_landmarks(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("landmark directory " + dir.string() + " does not exist");
    std::map<std::string, std::vector<roi::LandmarkFrame>> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json")
            out.emplace(e.path().stem().string(), read_landmarks_json(e.path()));
    }
    return out;
}

// --- ratings ---------------------------------------------------------------

std::vector<dataset::EmotionRating> read_ratings_csv(const fs::path& path) {
    const auto table = read_csv(path);
    const auto ctx = path.string();
    const auto cp = table.column("participant_id", ctx), ct = table.column("trial_id", ctx);
    std::array<std::size_t, kTargetCount> cols{};
    for (auto t : kAllTargets) cols[index_of(t)] = table.column(to_string(t), ctx);
    std::vector<dataset::EmotionRating> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = ctx + " row " + std::to_string(r + 2);
        dataset::EmotionRating rating;
        rating.participant_id = row[cp];
        rating.trial_id = row[ct];
        for (std::size_t k = 0; k < kTargetCount; ++k) {
            const auto v = parse_int(row[cols[k]], where);
            if (v < 1 || v > 9) throw SchemaError(where + ": rating " + std::to_string(v) + " outside 1..9");
            rating.values[k] = static_cast<int>(v);
        }
        out.push_back(rating);
    }
    return out;
}

std::string format_ratings_csv(const std::vector<dataset::EmotionRating>& ratings) {
    std::string out = "participant_id,trial_id";
    for (auto t : kAllTargets) out += "," + std::string(to_string(t));
    out += '\n';
    for (const auto& r : ratings) {
        out += r.participant_id + ',' + r.trial_id;
        for (int v : r.values) out += ',' + std::to_string(v);
        out += '\n';
    }
    return out;
}

// --- features --------------------------------------------------------------

std::vector<std::string> feature_csv_header() {
    std::vector<std::string> h = {"participant_id", "trial_id"};
    for (std::size_t k = 0; k < features::kSteps; ++k) {
        for (std::size_t c = 0; c < features::kChannels; ++c)
            h.push_back("s" + std::to_string(k) + "_" + std::string(features::channel_name(c)));
    }
    for (auto n : features::kTraitNames) h.push_back("trait_" + std::string(n));
    for (auto e : kAllEmotions) h.push_back("stim_" + std::string(to_string(e)));
    for (auto n : features::kEnvNames) h.push_back("env_" + std::string(n));
    for (auto t : kAllTargets) h.push_back("label_" + std::string(to_string(t)));
    return h;
}

std::string format_feature_csv(const std::vector<features::FeatureRecord>& records) {
    std::string out;
    const auto header = feature_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& r : records) {
        out += r.participant_id + ',' + r.trial_id;
        for (double v : r.sequence.values) out += ',' + shortest(v);
        for (double v : r.personality.traits) out += ',' + shortest(v);
        for (double v : r.stimulus) out += ',' + shortest(v);
        for (double v : r.environment) out += ',' + shortest(v);
        for (auto l : r.labels) out += ',' + std::to_string(index_of(l));
        out += '\n';
    }
    return out;
}

std::vector<features::FeatureRecord> read_feature_csv(const fs::path& path) {
    const auto table = read_csv(path);
    const auto ctx = path.string();
    const auto expected = feature_csv_header();
    if (table.header.size() != expected.size())
        throw DimensionMismatchError(ctx + ": feature file has " + std::to_string(table.header.size()) +
                                     " columns, expected " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (table.header[i] != expected[i])
            throw SchemaError(ctx + ": column " + std::to_string(i) + " is '" + table.header[i] + "', expected '" +
                              expected[i] + "'");
    }
    std::vector<features::FeatureRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = ctx + " row " + std::to_string(r + 2);
        features::FeatureRecord rec;
        std::size_t c = 0;
        rec.participant_id = row[c++];
        rec.trial_id = row[c++];
        for (auto& v : rec.sequence.values) v = parse_double(row[c++], where);
        for (auto& v : rec.personality.traits) v = parse_double(row[c++], where);
        for (auto& v : rec.stimulus) v = parse_double(row[c++], where);
        for (auto& v : rec.environment) v = parse_double(row[c++], where);
        for (auto& l : rec.labels) {
            const auto v = parse_int(row[c++], where);
            if (v < 0 || v > 2) throw SchemaError(where + ": label bin must be 0, 1 or 2");
            l = bin_from_index(static_cast<std::size_t>(v));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<fs::path> write_synth_dataset(const dataset::SynthDataset& data, const fs::path& sessions_dir,
                                          const fs::path& landmarks_dir, const fs::path& ratings_file) {
    std::vector<fs::path> written;
    for (const auto& s : data.sessions) {
        const auto csv_name = s.participant_id + ".csv";
        const auto csv_path = sessions_dir / csv_name;
        write_text(csv_path, format_gaze_csv(session_stream(s)));
        written.push_back(csv_path);
        const auto json_path = sessions_dir / (s.participant_id + ".json");
        write_text(json_path, format_session_json(s, csv_name));
        written.push_back(json_path);
    }
    for (const auto& [clip, frames] : data.landmarks) {
        const auto path = landmarks_dir / (clip + ".json");
        write_text(path, format_landmarks_json(frames));
        written.push_back(path);
    }
    write_text(ratings_file, format_ratings_csv(data.ratings));
    written.push_back(ratings_file);
    return written;
}

}  // namespace emorec::io
