#include "fame/fop.hpp"

#include <cmath>

#include "fame/error.hpp"
#include "fame/rng.hpp"
#include "fame/text.hpp"

namespace fame {

void FopConfig::validate() const {
  if (d_face <= 0 || d_voice <= 0 || proj_dim <= 0 || n_classes <= 0)
    throw Error(ErrorKind::Config, "model dimensions must be positive");
  if (alpha < 0.0)
    throw Error(ErrorKind::Config, "alpha must be non-negative");
  // learning_rate 0 and epochs 0 are accepted: both reduce train() to an
  // identity over the initial model.
  if (learning_rate < 0.0 || !std::isfinite(learning_rate))
    throw Error(ErrorKind::Config, "learning_rate must be non-negative");
  if (epochs < 0)
    throw Error(ErrorKind::Config, "epochs must be non-negative");
}

namespace {

Eigen::MatrixXd glorot(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = rng.uniform(-limit, limit);
  return m;
}

void require(bool ok, ErrorKind kind, const char* message) {
  if (!ok) throw Error(kind, message);
}

void validate_batch(const FopConfig& config, const Batch& batch) {
  require(batch.faces.rows() == batch.voices.rows() &&
              batch.faces.rows() ==
                  static_cast<Eigen::Index>(batch.labels.size()),
          ErrorKind::Shape, "batch row counts disagree");
  require(batch.faces.cols() == config.d_face, ErrorKind::Shape,
          "batch face dimension mismatch");
  require(batch.voices.cols() == config.d_voice, ErrorKind::Shape,
          "batch voice dimension mismatch");
  require(batch.size() >= 2, ErrorKind::Config, "batch needs at least 2 rows");
  int first = batch.labels.empty() ? 0 : batch.labels.front();
  bool two_labels = false;
  for (int label : batch.labels) {
    require(label >= 0 && label < config.n_classes, ErrorKind::Label,
            "label out of range");
    if (label != first) two_labels = true;
  }
  require(two_labels, ErrorKind::Config,
          "batch needs at least two distinct labels");
}

struct Forward {
  Eigen::MatrixXd face_proj;   // N x D
  Eigen::MatrixXd voice_proj;  // N x D
  Eigen::MatrixXd gate;        // N x D
  Eigen::MatrixXd fused;       // N x D
  Eigen::MatrixXd logits;      // N x C
  Eigen::MatrixXd softmax;     // N x C
};

Forward run_forward(const FopModel& model, const Batch& batch) {
  Forward f;
  f.face_proj = (batch.faces * model.w_face.transpose()).rowwise() +
                model.b_face.transpose();
  f.voice_proj = (batch.voices * model.w_voice.transpose()).rowwise() +
                 model.b_voice.transpose();
  const Eigen::Index n = batch.size();
  const Eigen::Index d = model.config.proj_dim;
  Eigen::MatrixXd concat(n, 2 * d);
  concat << f.face_proj, f.voice_proj;
  Eigen::MatrixXd z =
      (concat * model.w_gate.transpose()).rowwise() + model.b_gate.transpose();
  f.gate = 1.0 / (1.0 + (-z.array()).exp());
  f.fused = f.gate.array() * f.face_proj.array() +
            (1.0 - f.gate.array()) * f.voice_proj.array();
  f.logits = (f.fused * model.w_logits.transpose()).rowwise() +
             model.b_logits.transpose();
  // softmax with rowwise max subtraction
  Eigen::VectorXd row_max = f.logits.rowwise().maxCoeff();
  Eigen::MatrixXd shifted = f.logits.colwise() - row_max;
  Eigen::MatrixXd expd = shifted.array().exp();
  f.softmax = expd.array().colwise() / expd.rowwise().sum().array();
  return f;
}

double ce_from_forward(const Forward& f, std::span<const int> labels) {
  const Eigen::Index n = f.logits.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = f.logits.row(i).maxCoeff();
    double lse = m + std::log((f.logits.row(i).array() - m).exp().sum());
    sum += lse - f.logits(i, labels[i]);
  }
  return sum / static_cast<double>(n);
}

// Row norms with the zero-norm check shared by loss_oc and score_pair.
Eigen::VectorXd row_norms_checked(const Eigen::MatrixXd& m) {
  Eigen::VectorXd norms = m.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    if (norms[i] == 0.0)
      throw Error(ErrorKind::Scoring,
                  "zero-norm fused vector at row " + std::to_string(i));
  return norms;
}

// Pair means of the cosine matrix: A over same-label pairs (i<j), B over
// different-label pairs. A defaults to 1 when no same-label pair exists.
struct PairMeans {
  double same = 1.0;
  double diff = 0.0;
  std::size_t n_same = 0;
  std::size_t n_diff = 0;
};

PairMeans pair_means(const Eigen::MatrixXd& cosines,
                     std::span<const int> labels) {
  PairMeans m;
  const Eigen::Index n = cosines.rows();
  double same_sum = 0.0, diff_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) {
        same_sum += cosines(i, j);
        ++m.n_same;
      } else {
        diff_sum += cosines(i, j);
        ++m.n_diff;
      }
    }
  if (m.n_diff == 0)
    throw Error(ErrorKind::Config,
                "orthogonality loss needs at least two distinct labels");
  if (m.n_same > 0) m.same = same_sum / static_cast<double>(m.n_same);
  m.diff = diff_sum / static_cast<double>(m.n_diff);
  return m;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

FopModel FopModel::init(const FopConfig& config) {
  config.validate();
  FopModel model;
  model.config = config;
  const int d = config.proj_dim;
  Rng rng = Rng::fork(config.seed, 0x0f0b);
  model.w_face = glorot(rng, d, config.d_face);
  model.b_face = Eigen::VectorXd::Zero(d);
  model.w_voice = glorot(rng, d, config.d_voice);
  model.b_voice = Eigen::VectorXd::Zero(d);
  model.w_gate = glorot(rng, d, 2 * d);
  model.b_gate = Eigen::VectorXd::Zero(d);
  model.w_logits = glorot(rng, config.n_classes, d);
  model.b_logits = Eigen::VectorXd::Zero(config.n_classes);
  return model;
}

void FopModel::check_finite() const {
  auto finite = [](const Eigen::MatrixXd& m) {
    return m.allFinite();
  };
  if (!(finite(w_face) && finite(w_voice) && finite(w_gate) &&
        finite(w_logits) && b_face.allFinite() && b_voice.allFinite() &&
        b_gate.allFinite() && b_logits.allFinite()))
    throw Error(ErrorKind::State, "model parameters are not finite");
}

Eigen::VectorXd project_face(const FopModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.config.d_face)
    throw Error(ErrorKind::Shape, "face embedding has dimension " +
                                      std::to_string(x.size()) + ", expected " +
                                      std::to_string(model.config.d_face));
  return model.w_face * x + model.b_face;
}

Eigen::VectorXd project_voice(const FopModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.config.d_voice)
    throw Error(ErrorKind::Shape, "voice embedding has dimension " +
                                      std::to_string(x.size()) +
                                      ", expected " +
                                      std::to_string(model.config.d_voice));
  return model.w_voice * x + model.b_voice;
}

GateResult gated_fuse(const FopModel& model, const Eigen::VectorXd& face_proj,
                      const Eigen::VectorXd& voice_proj) {
  const int d = model.config.proj_dim;
  if (face_proj.size() != d || voice_proj.size() != d)
    throw Error(ErrorKind::Shape, "projected vectors must have dimension D");
  Eigen::VectorXd concat(2 * d);
  concat << face_proj, voice_proj;
  Eigen::VectorXd z = model.w_gate * concat + model.b_gate;
  GateResult result;
  result.gate = 1.0 / (1.0 + (-z.array()).exp());
  result.fused = result.gate.array() * face_proj.array() +
                 (1.0 - result.gate.array()) * voice_proj.array();
  return result;
}

double loss_ce(const FopModel& model, const Batch& batch) {
  validate_batch(model.config, batch);
  Forward f = run_forward(model, batch);
  return ce_from_forward(f, batch.labels);
}

double loss_oc(const Eigen::MatrixXd& fused, std::span<const int> labels) {
  if (fused.rows() != static_cast<Eigen::Index>(labels.size()))
    throw Error(ErrorKind::Shape, "fused rows and labels disagree");
  if (fused.rows() < 2)
    throw Error(ErrorKind::Config, "orthogonality loss needs at least 2 rows");
  Eigen::VectorXd norms = row_norms_checked(fused);
  Eigen::MatrixXd unit = fused.array().colwise() / norms.array();
  Eigen::MatrixXd cosines = unit * unit.transpose();
  PairMeans m = pair_means(cosines, labels);
  return (1.0 - m.same) + std::abs(m.diff);
}

LossBreakdown loss(const FopModel& model, const Batch& batch) {
  validate_batch(model.config, batch);
  Forward f = run_forward(model, batch);
  LossBreakdown breakdown;
  breakdown.ce = ce_from_forward(f, batch.labels);
  breakdown.oc = loss_oc(f.fused, batch.labels);
  breakdown.total = breakdown.ce + model.config.alpha * breakdown.oc;
  return breakdown;
}

FopGradients backward(const FopModel& model, const Batch& batch) {
  validate_batch(model.config, batch);
  const Forward f = run_forward(model, batch);
  const Eigen::Index n = batch.size();
  const Eigen::Index d = model.config.proj_dim;
  const double alpha = model.config.alpha;

  // Cross-entropy path: dL/dlogits = (softmax - onehot) / N.
  Eigen::MatrixXd d_logits = f.softmax;
  for (Eigen::Index i = 0; i < n; ++i) d_logits(i, batch.labels[i]) -= 1.0;
  d_logits /= static_cast<double>(n);

  FopGradients g;
  g.w_logits = d_logits.transpose() * f.fused;
  g.b_logits = d_logits.colwise().sum().transpose();
  Eigen::MatrixXd d_fused = d_logits * model.w_logits;

  // Orthogonality path. With u_i = h_i/|h_i| and the pair-coefficient
  // matrix W (symmetric, zero diagonal), dL_OC/dh_i =
  // ( sum_j W_ij u_j - (sum_j W_ij cos_ij) u_i ) / |h_i|.
  if (alpha != 0.0) {
    Eigen::VectorXd norms = row_norms_checked(f.fused);
    Eigen::MatrixXd unit = f.fused.array().colwise() / norms.array();
    Eigen::MatrixXd cosines = unit * unit.transpose();
    PairMeans m = pair_means(cosines, batch.labels);
    const double same_coeff =
        m.n_same > 0 ? -1.0 / static_cast<double>(m.n_same) : 0.0;
    const double diff_coeff = sign_of(m.diff) / static_cast<double>(m.n_diff);
    Eigen::MatrixXd weights(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      weights(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double w =
            batch.labels[i] == batch.labels[j] ? same_coeff : diff_coeff;
        weights(i, j) = w;
        weights(j, i) = w;
      }
    }
    Eigen::MatrixXd weighted_units = weights * unit;  // N x D
    Eigen::VectorXd diag = (weights.array() * cosines.array()).rowwise().sum();
    Eigen::MatrixXd d_fused_oc =
        (weighted_units - diag.asDiagonal() * unit).array().colwise() /
        norms.array();
    d_fused += alpha * d_fused_oc;
  }

  // Fusion: h = g (.) p + (1-g) (.) q.
  Eigen::MatrixXd d_gate =
      d_fused.array() * (f.face_proj.array() - f.voice_proj.array());
  Eigen::MatrixXd d_face_proj = d_fused.array() * f.gate.array();
  Eigen::MatrixXd d_voice_proj = d_fused.array() * (1.0 - f.gate.array());

  // Gate pre-activation and its inputs.
  Eigen::MatrixXd d_z =
      d_gate.array() * f.gate.array() * (1.0 - f.gate.array());
  Eigen::MatrixXd concat(n, 2 * d);
  concat << f.face_proj, f.voice_proj;
  g.w_gate = d_z.transpose() * concat;
  g.b_gate = d_z.colwise().sum().transpose();
  Eigen::MatrixXd d_concat = d_z * model.w_gate;
  d_face_proj += d_concat.leftCols(d);
  d_voice_proj += d_concat.rightCols(d);

  g.w_face = d_face_proj.transpose() * batch.faces;
  g.b_face = d_face_proj.colwise().sum().transpose();
  g.w_voice = d_voice_proj.transpose() * batch.voices;
  g.b_voice = d_voice_proj.colwise().sum().transpose();
  return g;
}

TrainResult train(const FopConfig& config, const Batch& dataset) {
  config.validate();
  if (dataset.size() == 0)
    throw Error(ErrorKind::Config, "training dataset is empty");
  validate_batch(config, dataset);

  TrainResult result;
  result.model = FopModel::init(config);
  result.trace.reserve(config.epochs);
  const double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    result.trace.push_back(loss(result.model, dataset));
    FopGradients g = backward(result.model, dataset);
    FopModel& m = result.model;
    m.w_face -= lr * g.w_face;
    m.b_face -= lr * g.b_face;
    m.w_voice -= lr * g.w_voice;
    m.b_voice -= lr * g.b_voice;
    m.w_gate -= lr * g.w_gate;
    m.b_gate -= lr * g.b_gate;
    m.w_logits -= lr * g.w_logits;
    m.b_logits -= lr * g.b_logits;
  }
  result.model.check_finite();
  return result;
}

double score_pair(const FopModel& model, const Eigen::VectorXd& face_emb,
                  const Eigen::VectorXd& voice_emb) {
  Eigen::VectorXd f = project_face(model, face_emb);
  Eigen::VectorXd v = project_voice(model, voice_emb);
  double nf = f.norm();
  double nv = v.norm();
  if (nf == 0.0 || nv == 0.0)
    throw Error(ErrorKind::Scoring, "zero-norm projection cannot be scored");
  double denom = std::max(nf * nv, 1e-12);
  return f.dot(v) / denom;
}

namespace {

constexpr std::string_view kCheckpointMagic = "fame-fop";
constexpr int kCheckpointVersion = 1;

void emit_tensor(std::string& out, std::string_view name,
                 const Eigen::MatrixXd& m) {
  out += "tensor ";
  out += name;
  out += ' ' + std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) +
         '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
}

}  // namespace

std::string serialize_checkpoint(const FopModel& model) {
  const FopConfig& c = model.config;
  std::string out;
  out += std::string(kCheckpointMagic) + ' ' +
         std::to_string(kCheckpointVersion) + '\n';
  out += "d_face " + std::to_string(c.d_face) + '\n';
  out += "d_voice " + std::to_string(c.d_voice) + '\n';
  out += "proj_dim " + std::to_string(c.proj_dim) + '\n';
  out += "n_classes " + std::to_string(c.n_classes) + '\n';
  out += "alpha " + format_double(c.alpha) + '\n';
  out += "learning_rate " + format_double(c.learning_rate) + '\n';
  out += "epochs " + std::to_string(c.epochs) + '\n';
  out += "seed " + std::to_string(c.seed) + '\n';
  emit_tensor(out, "w_face", model.w_face);
  emit_tensor(out, "b_face", model.b_face);
  emit_tensor(out, "w_voice", model.w_voice);
  emit_tensor(out, "b_voice", model.b_voice);
  emit_tensor(out, "w_gate", model.w_gate);
  emit_tensor(out, "b_gate", model.b_gate);
  emit_tensor(out, "w_logits", model.w_logits);
  emit_tensor(out, "b_logits", model.b_logits);
  return out;
}

namespace {

class CheckpointParser {
 public:
  explicit CheckpointParser(std::string_view text)
      : lines_(split_lines(text)) {}

  std::vector<std::string_view> next_fields() {
    while (pos_ < lines_.size()) {
      const TextLine& line = lines_[pos_++];
      if (is_skippable(line.text)) continue;
      current_line_ = line.number;
      return split_fields(line.text);
    }
    throw Error(ErrorKind::Format, "unexpected end of checkpoint");
  }

  long expect_int(std::string_view key) {
    auto fields = next_fields();
    double v;
    if (fields.size() != 2 || fields[0] != key || !parse_double(fields[1], v))
      throw Error(ErrorKind::Format,
                  "checkpoint: expected `" + std::string(key) + " <value>`",
                  current_line_);
    return static_cast<long>(v);
  }

  double expect_real(std::string_view key) {
    auto fields = next_fields();
    double v;
    if (fields.size() != 2 || fields[0] != key || !parse_double(fields[1], v))
      throw Error(ErrorKind::Format,
                  "checkpoint: expected `" + std::string(key) + " <value>`",
                  current_line_);
    return v;
  }

  Eigen::MatrixXd expect_tensor(std::string_view name, Eigen::Index rows,
                                Eigen::Index cols) {
    auto header = next_fields();
    double r, c;
    if (header.size() != 4 || header[0] != "tensor" || header[1] != name ||
        !parse_double(header[2], r) || !parse_double(header[3], c))
      throw Error(ErrorKind::Format,
                  "checkpoint: expected tensor " + std::string(name),
                  current_line_);
    if (static_cast<Eigen::Index>(r) != rows ||
        static_cast<Eigen::Index>(c) != cols)
      throw Error(ErrorKind::Shape,
                  "checkpoint tensor " + std::string(name) +
                      " has shape " + std::to_string((long)r) + "x" +
                      std::to_string((long)c) + ", expected " +
                      std::to_string(rows) + "x" + std::to_string(cols),
                  current_line_);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      auto fields = next_fields();
      if (fields.size() != static_cast<std::size_t>(cols))
        throw Error(ErrorKind::Shape,
                    "checkpoint tensor " + std::string(name) +
                        ": bad row width",
                    current_line_);
      for (Eigen::Index j = 0; j < cols; ++j) {
        double v;
        if (!parse_double(fields[j], v) || !std::isfinite(v))
          throw Error(ErrorKind::Format,
                      "checkpoint tensor " + std::string(name) +
                          ": non-finite value",
                      current_line_);
        m(i, j) = v;
      }
    }
    return m;
  }

 private:
  std::vector<TextLine> lines_;
  std::size_t pos_ = 0;
  int current_line_ = 0;
};

}  // namespace

FopModel parse_checkpoint(std::string_view text) {
  CheckpointParser parser(text);
  auto magic = parser.next_fields();
  if (magic.size() != 2 || magic[0] != kCheckpointMagic)
    throw Error(ErrorKind::Format, "not a fop checkpoint");
  double version;
  if (!parse_double(magic[1], version) || version != kCheckpointVersion)
    throw Error(ErrorKind::Format, "unsupported checkpoint version");

  FopConfig config;
  config.d_face = static_cast<int>(parser.expect_int("d_face"));
  config.d_voice = static_cast<int>(parser.expect_int("d_voice"));
  config.proj_dim = static_cast<int>(parser.expect_int("proj_dim"));
  config.n_classes = static_cast<int>(parser.expect_int("n_classes"));
  config.alpha = parser.expect_real("alpha");
  config.learning_rate = parser.expect_real("learning_rate");
  config.epochs = static_cast<int>(parser.expect_int("epochs"));
  config.seed = static_cast<std::uint64_t>(parser.expect_int("seed"));
  config.validate();

  FopModel model;
  model.config = config;
  const int d = config.proj_dim;
  model.w_face = parser.expect_tensor("w_face", d, config.d_face);
  model.b_face = parser.expect_tensor("b_face", d, 1);
  model.w_voice = parser.expect_tensor("w_voice", d, config.d_voice);
  model.b_voice = parser.expect_tensor("b_voice", d, 1);
  model.w_gate = parser.expect_tensor("w_gate", d, 2 * d);
  model.b_gate = parser.expect_tensor("b_gate", d, 1);
  model.w_logits = parser.expect_tensor("w_logits", config.n_classes, d);
  model.b_logits = parser.expect_tensor("b_logits", config.n_classes, 1);
  model.check_finite();
  return model;
}

void save_checkpoint(const FopModel& model,
                     const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(model));
}

FopModel load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace fame
