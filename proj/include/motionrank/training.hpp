#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "motionrank/models.hpp"
#include "motionrank/rankpool.hpp"

namespace motionrank {

// One generator training sample: the current dynamic image, the ground-truth
// next one, and the future window's frames needed by the static loss.
struct GenSample {
    DynamicImage d_current;
    DynamicImage d_next;
    std::vector<Frame> leading_future; // first T-1 frames of the future window
    Frame final_future;                // its last frame
    int label = -1;
};

struct LossSet {
    bool dl = true;
    bool sl = false;
    bool cl = false;

    int count() const { return (dl ? 1 : 0) + (sl ? 1 : 0) + (cl ? 1 : 0); }
    bool none() const { return count() == 0; }
};

struct TrainConfig {
    int batch_size = 32;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 0.1;
    int epochs = 30;
    LossSet losses;
    std::uint64_t seed = 1;
};

// Mean squared error between predicted and true dynamic images.
std::pair<double, Tensor> dynamic_loss(const DynamicImage& d_hat, const DynamicImage& d_true);

// MSE between the frame recovered from d_hat and the true final frame,
// backpropagated through the affine recovery.
std::pair<double, Tensor> static_loss(const DynamicImage& d_hat,
                                      const std::vector<Frame>& leading_future,
                                      const Frame& final_future, int T);

// Cross-entropy of the frozen teacher on the standardized d_hat; the
// gradient flows to d_hat only.
std::pair<double, Tensor> classification_loss(const DynamicImage& d_hat, int label,
                                              const ModelParams& teacher);

// Deterministic shuffled partition of 0..batch_size-1 into one index set per
// enabled loss (DL, SL, CL order); sizes differ by at most one.
std::vector<std::vector<std::size_t>> split_batch(std::size_t batch_size, const LossSet& enabled,
                                                  std::uint64_t seed);

// Per-epoch mean losses; a loss that is disabled stays unset.
struct EpochLoss {
    int epoch = 0;
    std::optional<double> dl;
    std::optional<double> sl;
    std::optional<double> cl;
};

struct GeneratorTrainResult {
    ModelParams generator;
    std::vector<EpochLoss> log;
};

// Batch-wise multitask training: each enabled loss gets its own sub-batch,
// the resulting parameter gradients are summed, and one Adam step is taken
// per batch. teacher may be null when CL is disabled.
GeneratorTrainResult train_generator(const std::vector<GenSample>& dataset,
                                     const GeneratorConfig& gen_config,
                                     const ModelParams* teacher, const TrainConfig& config);

enum class TeacherKind { Static, Dynamic };

struct TeacherTrainResult {
    ModelParams teacher;
    std::vector<std::pair<int, double>> accuracy_log; // (epoch, held-out frame-level accuracy)
};

// Static teachers train on raw frames, dynamic teachers on standardized
// dynamic images computed with window T at the given stride. Held-out
// accuracy comes from the validation split.
TeacherTrainResult train_teacher(const std::vector<FrameSequence>& train_videos,
                                 const std::vector<FrameSequence>& heldout_videos,
                                 TeacherKind kind, const ClassifierConfig& cls_config,
                                 const TrainConfig& config, int T, int stride);

// Frame-level accuracy of a classifier over (image, label) items.
double classifier_accuracy(const ModelParams& params,
                           const std::vector<std::pair<Tensor, int>>& items);

// Labeled images a teacher trains/evaluates on, one entry per frame or
// dynamic image.
std::vector<std::pair<Tensor, int>> teacher_items(const std::vector<FrameSequence>& videos,
                                                  TeacherKind kind, int T, int stride);

struct AugmentOps {
    bool hflip = false;
    int dx = 0;
    int dy = 0;
};

// Applies the same flip/shift to every frame so pooled dynamics stay
// coherent; shifts fill with zeros.
FrameSequence augment(const FrameSequence& seq, const AugmentOps& ops);

// CSV schema: epoch,loss_dl,loss_sl,loss_cl,teacher_acc with empty fields
// for whatever a run did not produce.
void write_generator_log_csv(const std::vector<EpochLoss>& log, const std::string& path);
void write_teacher_log_csv(const std::vector<std::pair<int, double>>& log, const std::string& path);

} // namespace motionrank
