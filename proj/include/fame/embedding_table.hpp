#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fame {

enum class Modality { Face, Voice };

std::string_view to_string(Modality modality);
Modality modality_from_string(std::string_view name);

struct EmbeddingRow {
  std::string speaker_id;
  std::string language;
  Modality modality = Modality::Face;
  Eigen::VectorXd values;
};

// Flat table of face/voice embedding vectors. File format:
// a header line `<n_rows> <d_face> <d_voice>`, then one row per line,
// `<speaker_id> <language> <face|voice> <d floats>`.
//
// Trial lists address rows through derived media paths:
// the k-th voice row of language L (in table order, counting from 0)
// is `voices/<L>/<k 0-padded to 5>.wav`, and face rows likewise map to
// `faces/<L>/<k>.jpg`.
struct EmbeddingTable {
  int d_face = 0;
  int d_voice = 0;
  std::vector<EmbeddingRow> rows;

  // Derived media path of each row, same order as `rows`.
  std::vector<std::string> row_paths() const;
  // path -> row index over the whole table.
  std::map<std::string, std::size_t> path_index() const;
};

EmbeddingTable parse_embedding_table(std::string_view text);
std::string serialize(const EmbeddingTable& table);

}  // namespace fame
