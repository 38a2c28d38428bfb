#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

namespace fame {

struct FopConfig {
  int d_face = 512;      // input face-embedding dimension
  int d_voice = 512;     // input voice-embedding dimension
  int proj_dim = 128;    // projected dimension D
  int n_classes = 0;     // training identity count
  double alpha = 1.0;    // weight of the orthogonality loss
  double learning_rate = 0.05;
  int epochs = 300;
  std::uint64_t seed = 1;

  void validate() const;
};

// Two-branch projection model: linear face/voice projections into a
// shared D-dimensional space, a sigmoid gate fusing them, and a logits
// layer over the training identities.
struct FopModel {
  FopConfig config;
  Eigen::MatrixXd w_face;    // D x d_face
  Eigen::VectorXd b_face;    // D
  Eigen::MatrixXd w_voice;   // D x d_voice
  Eigen::VectorXd b_voice;   // D
  Eigen::MatrixXd w_gate;    // D x 2D
  Eigen::VectorXd b_gate;    // D
  Eigen::MatrixXd w_logits;  // n_classes x D
  Eigen::VectorXd b_logits;  // n_classes

  // Seeded uniform (Glorot) weights, zero biases.
  static FopModel init(const FopConfig& config);

  void check_finite() const;
};

// Training samples, one per row; labels are dense identity indices.
struct Batch {
  Eigen::MatrixXd faces;   // N x d_face
  Eigen::MatrixXd voices;  // N x d_voice
  std::vector<int> labels;

  Eigen::Index size() const { return faces.rows(); }
};

struct LossBreakdown {
  double ce;
  double oc;
  double total;  // ce + alpha * oc
};

struct FopGradients {
  Eigen::MatrixXd w_face, w_voice, w_gate, w_logits;
  Eigen::VectorXd b_face, b_voice, b_gate, b_logits;
};

Eigen::VectorXd project_face(const FopModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd project_voice(const FopModel& model, const Eigen::VectorXd& x);

struct GateResult {
  Eigen::VectorXd fused;
  Eigen::VectorXd gate;  // elementwise in (0,1)
};

// gate = sigmoid(w_gate [face; voice] + b_gate),
// fused = gate (.) face_proj + (1 - gate) (.) voice_proj.
GateResult gated_fuse(const FopModel& model, const Eigen::VectorXd& face_proj,
                      const Eigen::VectorXd& voice_proj);

// Mean softmax cross-entropy of the fused logits against the labels.
double loss_ce(const FopModel& model, const Batch& batch);

// Orthogonality loss over fused rows: with s_ij the cosine of rows i and
// j, returns (1 - mean same-label s_ij) + |mean different-label s_ij|.
// A batch without same-label pairs contributes no within-class term.
double loss_oc(const Eigen::MatrixXd& fused, std::span<const int> labels);

LossBreakdown loss(const FopModel& model, const Batch& batch);

// Analytic gradients of ce + alpha * oc for every parameter tensor.
FopGradients backward(const FopModel& model, const Batch& batch);

struct TrainResult {
  FopModel model;
  std::vector<LossBreakdown> trace;  // loss at the start of each epoch
};

// Full-batch gradient descent with a fixed step, seeded init;
// deterministic for a given (config, dataset).
TrainResult train(const FopConfig& config, const Batch& dataset);

// Verification score: cosine between the projected (pre-fusion) face and
// voice embeddings. Higher means more confident the pair matches.
double score_pair(const FopModel& model, const Eigen::VectorXd& face_emb,
                  const Eigen::VectorXd& voice_emb);

// Versioned structured-text checkpoint; loading validates shapes.
std::string serialize_checkpoint(const FopModel& model);
FopModel parse_checkpoint(std::string_view text);
void save_checkpoint(const FopModel& model, const std::filesystem::path& path);
FopModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fame
