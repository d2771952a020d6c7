#include "duplex/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include "duplex/serde.hpp"

namespace duplex {

std::array<double, BlockFeatures::kDim> BlockFeatures::to_array() const {
    return {env_activity, spk_user,     spk_third, spk_none,        relevance,
            echo_energy,  asst_playing, text_done, since_transition};
}

BlockFeatures compute_block_features(std::span<const Frame> env_frames, bool asst_playing,
                                     bool text_done, std::int64_t blocks_since_transition,
                                     bool use_echo_energy) {
    BlockFeatures f;
    if (!env_frames.empty()) {
        const double n = static_cast<double>(env_frames.size());
        double fg_activity = 0, fg_relevance = 0, echo = 0;
        int user = 0, third = 0, foreground = 0;
        for (const auto& fr : env_frames) {
            switch (fr.speaker) {
                case Speaker::User:
                    ++user;
                    ++foreground;
                    fg_activity += fr.activity;
                    fg_relevance += fr.relevance;
                    break;
                case Speaker::ThirdParty:
                    ++third;
                    ++foreground;
                    fg_activity += fr.activity;
                    fg_relevance += fr.relevance;
                    break;
                case Speaker::AssistantEcho: echo += fr.energy; break;
                case Speaker::None: break;
            }
        }
        f.env_activity = foreground > 0 ? fg_activity / foreground : 0.0;
        f.relevance = foreground > 0 ? fg_relevance / foreground : 0.0;
        f.spk_user = user / n;
        f.spk_third = third / n;
        f.spk_none = (static_cast<double>(env_frames.size()) - foreground) / n;
        f.echo_energy = use_echo_energy ? echo / n : 0.0;
    }
    f.asst_playing = asst_playing ? 1.0 : 0.0;
    f.text_done = text_done ? 1.0 : 0.0;
    f.since_transition = std::min(1.0, static_cast<double>(blocks_since_transition) / 25.0);
    return f;
}

void FeatureHistory::push(const BlockFeatures& f) {
    recent_.push_back(f.to_array());
    while (recent_.size() > static_cast<std::size_t>(window_)) recent_.pop_front();
}

void FeatureHistory::reset() { recent_.clear(); }

std::vector<double> FeatureHistory::flat() const {
    std::vector<double> out(static_cast<std::size_t>(dim()), 0.0);
    // zero padding occupies the oldest slots until the window fills
    const std::size_t pad = static_cast<std::size_t>(window_) - recent_.size();
    for (std::size_t i = 0; i < recent_.size(); ++i)
        std::copy(recent_[i].begin(), recent_[i].end(),
                  out.begin() + static_cast<std::ptrdiff_t>((pad + i) * BlockFeatures::kDim));
    return out;
}

std::string to_string(PolicyAction a) {
    switch (a) {
        case PolicyAction::EmitHold: return "hold";
        case PolicyAction::EmitShift: return "shift";
        case PolicyAction::EmitText: return "text";
    }
    return "hold";
}

std::size_t PolicyModel::parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
}

namespace {

std::array<std::vector<double>*, 4> param_tensors(PolicyModel& m) {
    return {&m.w1, &m.b1, &m.w2, &m.b2};
}

std::array<const std::vector<double>*, 4> param_tensors(const PolicyModel& m) {
    return {&m.w1, &m.b1, &m.w2, &m.b2};
}

void check_dims(const PolicyModel& m) {
    const auto h = static_cast<std::size_t>(m.hidden_dim);
    const auto d = static_cast<std::size_t>(m.input_dim);
    if (m.input_dim <= 0 || m.hidden_dim <= 0)
        throw std::invalid_argument("policy dimensions must be positive");
    if (m.w1.size() != h * d || m.b1.size() != h || m.w2.size() != kActionCount * h ||
        m.b2.size() != kActionCount)
        throw std::invalid_argument("policy weight shapes are inconsistent");
}

struct ForwardPass {
    std::vector<double> hidden;                 // tanh activations
    std::array<double, kActionCount> logits{};
    std::array<double, kActionCount> probs{};
    std::array<double, kActionCount> logprobs{};
};

ForwardPass run_forward(const PolicyModel& m, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(m.input_dim))
        throw std::invalid_argument("feature dimension " + std::to_string(x.size()) +
                                    " does not match policy input " +
                                    std::to_string(m.input_dim));
    ForwardPass fp;
    const auto h = static_cast<std::size_t>(m.hidden_dim);
    const auto d = static_cast<std::size_t>(m.input_dim);
    fp.hidden.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        double z = m.b1[i];
        const double* row = m.w1.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
        fp.hidden[i] = std::tanh(z);
    }
    for (int a = 0; a < kActionCount; ++a) {
        double z = m.b2[static_cast<std::size_t>(a)];
        const double* row = m.w2.data() + static_cast<std::size_t>(a) * h;
        for (std::size_t j = 0; j < h; ++j) z += row[j] * fp.hidden[j];
        if (!std::isfinite(z)) throw std::invalid_argument("non-finite policy logits");
        fp.logits[static_cast<std::size_t>(a)] = z;
    }
    const double zmax = *std::max_element(fp.logits.begin(), fp.logits.end());
    double sum = 0.0;
    for (int a = 0; a < kActionCount; ++a) {
        fp.probs[static_cast<std::size_t>(a)] = std::exp(fp.logits[static_cast<std::size_t>(a)] - zmax);
        sum += fp.probs[static_cast<std::size_t>(a)];
    }
    const double logsum = zmax + std::log(sum);
    for (int a = 0; a < kActionCount; ++a) {
        fp.probs[static_cast<std::size_t>(a)] /= sum;
        fp.logprobs[static_cast<std::size_t>(a)] = fp.logits[static_cast<std::size_t>(a)] - logsum;
    }
    return fp;
}

struct Gradients {
    std::vector<double> w1, b1, w2, b2;

    explicit Gradients(const PolicyModel& m)
        : w1(m.w1.size(), 0.0), b1(m.b1.size(), 0.0), w2(m.w2.size(), 0.0), b2(m.b2.size(), 0.0) {}

    std::array<std::vector<double>*, 4> tensors() { return {&w1, &b1, &w2, &b2}; }
};

// Accumulates gradients for one example given dL/dlogits.
void backprop(const PolicyModel& m, std::span<const double> x, const ForwardPass& fp,
              const std::array<double, kActionCount>& g2, Gradients& g) {
    const auto h = static_cast<std::size_t>(m.hidden_dim);
    const auto d = static_cast<std::size_t>(m.input_dim);
    std::vector<double> dhidden(h, 0.0);
    for (int a = 0; a < kActionCount; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        g.b2[ai] += g2[ai];
        for (std::size_t j = 0; j < h; ++j) {
            g.w2[ai * h + j] += g2[ai] * fp.hidden[j];
            dhidden[j] += m.w2[ai * h + j] * g2[ai];
        }
    }
    for (std::size_t i = 0; i < h; ++i) {
        const double dz1 = dhidden[i] * (1.0 - fp.hidden[i] * fp.hidden[i]);
        g.b1[i] += dz1;
        for (std::size_t j = 0; j < d; ++j) g.w1[i * d + j] += dz1 * x[j];
    }
}

double ce_loss_and_grads(const PolicyModel& m, std::span<const TrainExample> batch,
                         Gradients* grads, double scale = 1.0) {
    if (batch.empty()) return 0.0;
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        if (ex.gold < 0 || ex.gold >= kActionCount)
            throw std::invalid_argument("gold action index out of range");
        const auto fp = run_forward(m, ex.features);
        loss += -ex.weight * fp.logprobs[static_cast<std::size_t>(ex.gold)] * inv;
        if (grads) {
            std::array<double, kActionCount> g2{};
            for (int a = 0; a < kActionCount; ++a) {
                const auto ai = static_cast<std::size_t>(a);
                const double onehot = a == ex.gold ? 1.0 : 0.0;
                g2[ai] = ex.weight * (fp.probs[ai] - onehot) * inv * scale;
            }
            backprop(m, ex.features, fp, g2, *grads);
        }
    }
    return loss;
}

double stable_softplus(double t) {
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void check_pair(const PolicyModel& m, const PreferencePair& p) {
    if (p.chosen == p.rejected)
        throw std::invalid_argument("preference pair chosen == rejected");
    if (p.chosen < 0 || p.chosen >= kActionCount || p.rejected < 0 || p.rejected >= kActionCount)
        throw std::invalid_argument("preference pair action index out of range");
    if (p.context.size() != static_cast<std::size_t>(m.input_dim))
        throw std::invalid_argument("preference pair context dimension mismatch");
}

double dpo_loss_and_grads(const PolicyModel& m, const PolicyModel& ref,
                          std::span<const PreferencePair> pairs, double beta, Gradients* grads) {
    if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
    if (pairs.empty()) return 0.0;
    double loss = 0.0;
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (const auto& p : pairs) {
        check_pair(m, p);
        const auto fp = run_forward(m, p.context);
        const auto fr = run_forward(ref, p.context);
        const auto c = static_cast<std::size_t>(p.chosen);
        const auto r = static_cast<std::size_t>(p.rejected);
        const double margin = (fp.logprobs[c] - fr.logprobs[c]) - (fp.logprobs[r] - fr.logprobs[r]);
        const double z = beta * margin;
        loss += stable_softplus(-z) * inv;
        if (grads) {
            // d(-log sigmoid(z))/dz = -sigmoid(-z); dz/dlogits = beta*(e_c - e_r)
            const double coeff = -sigmoid(-z) * beta * inv;
            std::array<double, kActionCount> g2{};
            g2[c] += coeff;
            g2[r] -= coeff;
            backprop(m, p.context, fp, g2, *grads);
        }
    }
    return loss;
}

}  // namespace

PolicyModel init_policy(int input_dim, int hidden_dim, StrategyKind strategy, std::uint64_t seed,
                        int history_blocks) {
    PolicyModel m;
    m.strategy = strategy;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.history_blocks = history_blocks;
    m.w1.resize(static_cast<std::size_t>(hidden_dim) * static_cast<std::size_t>(input_dim));
    m.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    m.w2.resize(static_cast<std::size_t>(kActionCount) * static_cast<std::size_t>(hidden_dim));
    m.b2.assign(kActionCount, 0.0);
    check_dims(m);

    std::mt19937_64 rng(seed);
    const double s1 = std::sqrt(6.0 / (input_dim + hidden_dim));
    std::uniform_real_distribution<double> d1(-s1, s1);
    for (auto& w : m.w1) w = d1(rng);
    const double s2 = std::sqrt(6.0 / (hidden_dim + kActionCount));
    std::uniform_real_distribution<double> d2(-s2, s2);
    for (auto& w : m.w2) w = d2(rng);
    return m;
}

std::array<double, kActionCount> policy_logits(const PolicyModel& m,
                                               std::span<const double> features) {
    check_dims(m);
    return run_forward(m, features).logits;
}

std::array<double, kActionCount> policy_forward(const PolicyModel& m,
                                                std::span<const double> features) {
    check_dims(m);
    return run_forward(m, features).probs;
}

PolicyAction policy_argmax(const PolicyModel& m, std::span<const double> features) {
    const auto probs = policy_forward(m, features);
    int best = 0;
    for (int a = 1; a < kActionCount; ++a)
        if (probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(best)]) best = a;
    return static_cast<PolicyAction>(best);
}

double weighted_ce_loss(const PolicyModel& m, std::span<const TrainExample> batch) {
    check_dims(m);
    return ce_loss_and_grads(m, batch, nullptr);
}

double dataset_accuracy(const PolicyModel& m, std::span<const TrainExample> dataset) {
    if (dataset.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& ex : dataset)
        if (static_cast<int>(policy_argmax(m, ex.features)) == ex.gold) ++correct;
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

TrainReport train_supervised(PolicyModel& model, std::span<const TrainExample> dataset,
                             const SftOptions& opts) {
    check_dims(model);
    if (dataset.empty()) throw std::invalid_argument("train_supervised: empty dataset");
    if (opts.lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    for (const auto& ex : dataset)
        if (ex.features.size() != static_cast<std::size_t>(model.input_dim))
            throw std::invalid_argument("train_supervised: feature dimension mismatch");

    TrainReport report;
    report.initial_loss = weighted_ce_loss(model, dataset);

    Gradients m1(model), m2(model);  // Adam first and second moments
    std::mt19937_64 rng(opts.seed);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    std::vector<TrainExample> batch;

    double t = 0.0;
    for (int step = 0; step < opts.steps; ++step) {
        batch.clear();
        const std::size_t bsz = std::min<std::size_t>(
            dataset.size(), static_cast<std::size_t>(std::max(1, opts.batch)));
        for (std::size_t i = 0; i < bsz; ++i) batch.push_back(dataset[pick(rng)]);

        Gradients g(model);
        const double loss = ce_loss_and_grads(model, batch, &g);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_supervised: non-finite loss at step " +
                                     std::to_string(step));
        t += 1.0;
        auto params = param_tensors(model);
        auto gts = g.tensors();
        auto m1ts = m1.tensors();
        auto m2ts = m2.tensors();
        const double bc1 = 1.0 - std::pow(opts.adam_beta1, t);
        const double bc2 = 1.0 - std::pow(opts.adam_beta2, t);
        for (std::size_t ti = 0; ti < params.size(); ++ti) {
            auto& p = *params[ti];
            auto& gv = *gts[ti];
            auto& mv = *m1ts[ti];
            auto& vv = *m2ts[ti];
            for (std::size_t i = 0; i < p.size(); ++i) {
                mv[i] = opts.adam_beta1 * mv[i] + (1.0 - opts.adam_beta1) * gv[i];
                vv[i] = opts.adam_beta2 * vv[i] + (1.0 - opts.adam_beta2) * gv[i] * gv[i];
                const double mhat = mv[i] / bc1;
                const double vhat = vv[i] / bc2;
                if (gv[i] != 0.0 || vhat != 0.0)
                    p[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.adam_eps);
            }
        }
        if (step % 10 == 0) report.loss_curve.emplace_back(step, loss);
    }
    report.final_loss = weighted_ce_loss(model, dataset);
    report.train_accuracy = dataset_accuracy(model, dataset);
    return report;
}

double dpo_loss(const PolicyModel& m, const PolicyModel& ref, std::span<const PreferencePair> pairs,
                double beta) {
    check_dims(m);
    check_dims(ref);
    return dpo_loss_and_grads(m, ref, pairs, beta, nullptr);
}

DpoStepResult dpo_step(PolicyModel& model, const PolicyModel& reference,
                       std::span<const PreferencePair> pairs,
                       std::span<const TrainExample> sft_batch, const DpoOptions& opts) {
    check_dims(model);
    check_dims(reference);
    if (model.input_dim != reference.input_dim || model.hidden_dim != reference.hidden_dim)
        throw std::invalid_argument("dpo_step: model and reference shapes differ");

    Gradients g(model);
    DpoStepResult res;
    res.preference_loss = dpo_loss_and_grads(model, reference, pairs, opts.beta, &g);
    if (opts.lambda_sft != 0.0 && !sft_batch.empty())
        res.sft_loss = ce_loss_and_grads(model, sft_batch, &g, opts.lambda_sft);
    res.total_loss = res.preference_loss + opts.lambda_sft * res.sft_loss;
    if (!std::isfinite(res.total_loss)) throw std::runtime_error("dpo_step: non-finite loss");

    auto params = param_tensors(model);
    auto gts = g.tensors();
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        auto& p = *params[ti];
        auto& gv = *gts[ti];
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= opts.lr * gv[i];
    }
    return res;
}

namespace {

double max_guarded_rel_error(PolicyModel model, const std::function<double(const PolicyModel&)>& f,
                             const Gradients& analytic, double h) {
    double worst = 0.0;
    auto params = param_tensors(model);
    auto ats = const_cast<Gradients&>(analytic).tensors();
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        auto& p = *params[ti];
        const auto& ga = *ats[ti];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double orig = p[i];
            p[i] = orig + h;
            const double up = f(model);
            p[i] = orig - h;
            const double down = f(model);
            p[i] = orig;
            const double gn = (up - down) / (2.0 * h);
            const double rel = std::abs(ga[i] - gn) / std::max(1e-4, std::abs(ga[i]) + std::abs(gn));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace

double gradcheck_ce(const PolicyModel& m, std::span<const TrainExample> batch, double h) {
    check_dims(m);
    Gradients g(m);
    ce_loss_and_grads(m, batch, &g);
    return max_guarded_rel_error(
        m, [&](const PolicyModel& mm) { return ce_loss_and_grads(mm, batch, nullptr); }, g, h);
}

double gradcheck_dpo(const PolicyModel& m, const PolicyModel& ref,
                     std::span<const PreferencePair> pairs, double beta,
                     std::span<const TrainExample> sft_batch, double lambda_sft, double h) {
    check_dims(m);
    check_dims(ref);
    Gradients g(m);
    dpo_loss_and_grads(m, ref, pairs, beta, &g);
    if (lambda_sft != 0.0 && !sft_batch.empty())
        ce_loss_and_grads(m, sft_batch, &g, lambda_sft);
    auto f = [&](const PolicyModel& mm) {
        double loss = dpo_loss_and_grads(mm, ref, pairs, beta, nullptr);
        if (lambda_sft != 0.0 && !sft_batch.empty())
            loss += lambda_sft * ce_loss_and_grads(mm, sft_batch, nullptr);
        return loss;
    };
    return max_guarded_rel_error(m, f, g, h);
}

namespace {

std::string weight_bytes(const PolicyModel& m) {
    std::string bytes;
    bytes.reserve(m.parameter_count() * sizeof(double));
    for (const auto* t : param_tensors(m))
        for (double v : *t) {
            char buf[sizeof(double)];
            std::memcpy(buf, &v, sizeof(double));
            bytes.append(buf, sizeof(double));
        }
    return bytes;
}

}  // namespace

void write_policy_json(std::ostream& out, const PolicyModel& m) {
    json j{{"schema_version", kSchemaVersion},
           {"kind", "policy"},
           {"version", m.version},
           {"strategy", to_string(m.strategy)},
           {"input_dim", m.input_dim},
           {"hidden_dim", m.hidden_dim},
           {"history_blocks", m.history_blocks},
           {"w1", m.w1},
           {"b1", m.b1},
           {"w2", m.w2},
           {"b2", m.b2},
           {"weight_hash", fnv1a64_hex(weight_bytes(m))}};
    out << j.dump(2) << '\n';
}

PolicyModel read_policy_json(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("policy file is not valid JSON: ") + e.what());
    }
    check_schema_version(j, "policy");
    if (j.value("kind", "") != "policy") throw ConfigError("not a policy file");
    reject_unknown_keys(j,
                        {"schema_version", "kind", "version", "strategy", "input_dim",
                         "hidden_dim", "history_blocks", "w1", "b1", "w2", "b2", "weight_hash"},
                        "policy");
    PolicyModel m;
    m.version = j.at("version").get<std::string>();
    m.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    m.input_dim = j.at("input_dim").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    m.history_blocks = j.at("history_blocks").get<int>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    check_dims(m);
    const auto hash = fnv1a64_hex(weight_bytes(m));
    if (hash != j.at("weight_hash").get<std::string>())
        throw ConfigError("policy weight hash mismatch (corrupt or hand-edited file)");
    return m;
}

void save_policy(const PolicyModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write policy file: " + path);
    write_policy_json(out, m);
    if (!out) throw IoError("failed writing policy file: " + path);
}

PolicyModel load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read policy file: " + path);
    try {
        return read_policy_json(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace duplex
