#pragma once

#include "emorec/dataset.h"
#include "emorec/features.h"
#include "emorec/roi.h"
#include "emorec/signal.h"
#include "emorec/synth.h"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace emorec::io {

namespace fs = std::filesystem;

/// printf-style fixed formatting ("%.*f"), with negative zero printed as 0.
std::string fixed(double v, int decimals);
/// Shortest text that parses back to the same double.
std::string shortest(double v);

std::string read_text(const fs::path& path);
/// Creates parent directories. Throws IoError with the path on failure.
void write_text(const fs::path& path, const std::string& content);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(std::string_view text);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Minimal CSV table: a header and string cells. No quoting support; the
/// formats here never contain commas inside fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws SchemaError naming the missing column.
    std::size_t column(std::string_view name, const std::string& context) const;
};

CsvTable parse_csv(const std::string& text, const std::string& context);
CsvTable read_csv(const fs::path& path);

double parse_double(const std::string& cell, const std::string& context);
long long parse_int(const std::string& cell, const std::string& context);

// Gaze CSV: t_ms,x,y,pupil_mm,valid in session time.
std::vector<signal::GazeSample> read_gaze_csv(const fs::path& path);
std::string format_gaze_csv(const std::vector<signal::GazeSample>& stream);

/// Session sidecar JSON. Trials come back without samples; `gaze_file` is the
/// CSV path relative to the JSON file.
struct SessionMeta {
    signal::SessionRecording session;
    std::string gaze_file;
};
SessionMeta read_session_json(const fs::path& path);
std::string format_session_json(const signal::SessionRecording& session, const std::string& gaze_file);

/// Reads the sidecar and its gaze CSV and cuts the stream into trials.
signal::SessionRecording load_session(const fs::path& json_path);
/// Every *.json sidecar in a directory, sorted by file name.
std::vector<signal::SessionRecording> load_sessions(const fs::path& dir);

/// Flattens trials back into a session-time stream.
std::vector<signal::GazeSample> session_stream(const signal::SessionRecording& session);

// Landmark JSON: [{"t_ms": ..., "points": [[x, y] x 68]}, ...]
std::vector<roi::LandmarkFrame> read_landmarks_json(const fs::path& path);
std::string format_landmarks_json(const std::vector<roi::LandmarkFrame>& frames);
std::map<std::string, std::vector<roi::LandmarkFrame>> load_landmarks(const fs::path& dir);

// Ratings CSV.
std::vector<dataset::EmotionRating> read_ratings_csv(const fs::path& path);
std::string format_ratings_csv(const std::vector<dataset::EmotionRating>& ratings);

// Feature dump CSV: ids, 180 sequence values (step-major), 5 traits,
// 6 one-hot, 2 environment, 4 label bins (0 = Low, 1 = Medium, 2 = High).
std::vector<std::string> feature_csv_header();
std::string format_feature_csv(const std::vector<features::FeatureRecord>& records);
std::vector<features::FeatureRecord> read_feature_csv(const fs::path& path);

/// Writes sessions/, landmarks/ and the ratings file for a generated dataset.
/// Returns the written paths in write order.
std::vector<fs::path> write_synth_dataset(const dataset::SynthDataset& data, const fs::path& sessions_dir,
                                          const fs::path& landmarks_dir, const fs::path& ratings_file);

}  // namespace emorec::io
