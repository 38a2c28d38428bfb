#include "fame/embedding_table.hpp"

#include <cmath>
#include <cstdio>

#include "fame/error.hpp"
#include "fame/text.hpp"

namespace fame {

std::string_view to_string(Modality modality) {
  return modality == Modality::Face ? "face" : "voice";
}

Modality modality_from_string(std::string_view name) {
  if (name == "face") return Modality::Face;
  if (name == "voice") return Modality::Voice;
  throw Error(ErrorKind::Format, "unknown modality '" + std::string(name) + "'");
}

std::vector<std::string> EmbeddingTable::row_paths() const {
  std::map<std::string, int> counters;  // per (language, modality)
  std::vector<std::string> paths;
  paths.reserve(rows.size());
  for (const EmbeddingRow& row : rows) {
    bool face = row.modality == Modality::Face;
    std::string key = row.language + (face ? "/f" : "/v");
    int index = counters[key]++;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05d", index);
    paths.push_back((face ? "faces/" : "voices/") + row.language + "/" + buf +
                    (face ? ".jpg" : ".wav"));
  }
  return paths;
}

std::map<std::string, std::size_t> EmbeddingTable::path_index() const {
  std::map<std::string, std::size_t> index;
  auto paths = row_paths();
  for (std::size_t i = 0; i < paths.size(); ++i) index.emplace(paths[i], i);
  return index;
}

EmbeddingTable parse_embedding_table(std::string_view text) {
  EmbeddingTable table;
  bool header_seen = false;
  std::size_t declared_rows = 0;
  for (const TextLine& line : split_lines(text)) {
    if (is_skippable(line.text)) continue;
    auto fields = split_fields(line.text);
    if (!header_seen) {
      if (fields.size() != 3)
        throw Error(ErrorKind::Format,
                    "embedding table header needs `<n_rows> <d_face> "
                    "<d_voice>` (line " +
                        std::to_string(line.number) + ")",
                    line.number);
      double n, df, dv;
      if (!parse_double(fields[0], n) || !parse_double(fields[1], df) ||
          !parse_double(fields[2], dv) || n < 0 || df <= 0 || dv <= 0 ||
          n != std::floor(n) || df != std::floor(df) || dv != std::floor(dv))
        throw Error(ErrorKind::Format, "bad embedding table header",
                    line.number);
      declared_rows = static_cast<std::size_t>(n);
      table.d_face = static_cast<int>(df);
      table.d_voice = static_cast<int>(dv);
      header_seen = true;
      continue;
    }
    if (fields.size() < 3)
      throw Error(ErrorKind::Format,
                  "embedding row at line " + std::to_string(line.number) +
                      " is too short",
                  line.number);
    EmbeddingRow row;
    row.speaker_id = std::string(fields[0]);
    row.language = std::string(fields[1]);
    row.modality = modality_from_string(fields[2]);
    int dim = row.modality == Modality::Face ? table.d_face : table.d_voice;
    if (fields.size() != static_cast<std::size_t>(dim) + 3)
      throw Error(ErrorKind::Shape,
                  "embedding row at line " + std::to_string(line.number) +
                      ": expected " + std::to_string(dim) + " values, got " +
                      std::to_string(fields.size() - 3),
                  line.number);
    row.values.resize(dim);
    for (int i = 0; i < dim; ++i) {
      double v;
      if (!parse_double(fields[i + 3], v) || !std::isfinite(v))
        throw Error(ErrorKind::Format,
                    "embedding row at line " + std::to_string(line.number) +
                        ": value " + std::to_string(i) + " is not finite",
                    line.number);
      row.values[i] = v;
    }
    table.rows.push_back(std::move(row));
  }
  if (!header_seen)
    throw Error(ErrorKind::Format, "embedding table has no header line");
  if (table.rows.size() != declared_rows)
    throw Error(ErrorKind::Format,
                "embedding table header declares " +
                    std::to_string(declared_rows) + " rows, found " +
                    std::to_string(table.rows.size()));
  return table;
}

std::string serialize(const EmbeddingTable& table) {
  std::string out = std::to_string(table.rows.size()) + ' ' +
                    std::to_string(table.d_face) + ' ' +
                    std::to_string(table.d_voice) + '\n';
  for (const EmbeddingRow& row : table.rows) {
    out += row.speaker_id;
    out += ' ';
    out += row.language;
    out += ' ';
    out += to_string(row.modality);
    for (int i = 0; i < row.values.size(); ++i) {
      out += ' ';
      out += format_double(row.values[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace fame
