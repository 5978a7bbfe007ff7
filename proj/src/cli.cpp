#include "kdist/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "kdist/analytics.hpp"
#include "kdist/config.hpp"
#include "kdist/critic.hpp"
#include "kdist/error.hpp"
#include "kdist/labels.hpp"
#include "kdist/pipeline.hpp"
#include "kdist/prompt.hpp"

namespace kdist::cli {
namespace {

namespace fs = std::filesystem;

struct Context {
    std::ostream& out;
    std::ostream& err;
};

void emit(Context& ctx, const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        ctx.out << content;
    } else {
        write_file_atomic(out_path, content);
    }
}

std::optional<RunConfig> maybe_config(const std::string& path) {
    if (path.empty()) return std::nullopt;
    return RunConfig::load(path);
}

fs::path pick(const std::string& flag, const std::optional<RunConfig>& cfg, const std::string& key,
              const std::string& what) {
    if (!flag.empty()) return flag;
    if (cfg) return cfg->path(key);
    throw UsageError("missing " + what + " (pass it explicitly or via --config paths." + key + ")");
}

void warn_all(Context& ctx, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) ctx.err << "warning: " << w << "\n";
}

std::vector<double> default_grid() {
    return {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx{out, err};
    CLI::App app{"kdist: distill a commonsense knowledge corpus from a language model", "kdist"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string report_path;

    // generate-events
    auto* gen_events = app.add_subcommand("generate-events", "Generate unique events from the seed pool");
    gen_events->add_option("--config", config_path, "Run config JSON")->required();
    gen_events->add_option("--out", out_path, "Events JSONL (default paths.events)");
    gen_events->add_option("--report", report_path, "Run report JSON (default stdout)");
    std::optional<std::size_t> target_override;
    gen_events->add_option("--target", target_override, "Override plan.target_event_count");

    // generate-inferences
    std::string events_path;
    auto* gen_inf = app.add_subcommand("generate-inferences", "Generate inferences for every event and relation");
    gen_inf->add_option("--config", config_path, "Run config JSON")->required();
    gen_inf->add_option("--events", events_path, "Events JSONL (default paths.events)");
    gen_inf->add_option("--out", out_path, "Corpus JSONL (default paths.corpus)");
    gen_inf->add_option("--report", report_path, "Run report JSON (default stdout)");

    // labels
    auto* labels = app.add_subcommand("labels", "Human label handling");
    labels->require_subcommand(1);
    std::string labels_path;
    std::string corpus_path;
    auto* labels_agg = labels->add_subcommand("aggregate", "Majority-vote raw labels into labeled triples");
    labels_agg->add_option("--config", config_path, "Run config JSON");
    labels_agg->add_option("--labels", labels_path, "Raw label JSONL (default paths.labels)");
    labels_agg->add_option("--corpus", corpus_path, "Corpus the labels refer to (default paths.corpus)");
    labels_agg->add_option("--out", out_path, "Labeled JSONL (default stdout)");

    std::string labeled_path;
    std::string out_dir;
    std::optional<std::uint64_t> split_seed;
    auto* labels_split = labels->add_subcommand("split", "Seeded 80/10/10 train/dev/test split");
    labels_split->add_option("--config", config_path, "Run config JSON");
    labels_split->add_option("--labeled", labeled_path, "Labeled JSONL")->required();
    labels_split->add_option("--seed", split_seed, "Shuffle seed (default config rng_seed, else 0)");
    labels_split->add_option("--out-dir", out_dir, "Directory for train/dev/test.jsonl")->required();

    // score
    std::string scorer_name;
    std::optional<double> constant_score;
    auto* score = app.add_subcommand("score", "Score a corpus with a critic binding");
    score->add_option("--config", config_path, "Run config JSON");
    score->add_option("--corpus", corpus_path, "Corpus JSONL (default paths.corpus)");
    score->add_option("--scorer", scorer_name, "Binding name from config scorers");
    score->add_option("--constant", constant_score, "Use a constant scorer with this value");
    score->add_option("--out", out_path, "Scores JSONL (default stdout)");

    // filter
    std::string scores_path;
    std::optional<double> cutoff;
    std::string preset;
    std::string calibration_path;
    auto* filter = app.add_subcommand("filter", "Keep triples whose critic score clears a cutoff");
    filter->add_option("--config", config_path, "Run config JSON (for presets)");
    filter->add_option("--corpus", corpus_path, "Corpus JSONL (default paths.corpus)");
    filter->add_option("--scores", scores_path, "Scores JSONL")->required();
    auto* cutoff_opt = filter->add_option("--cutoff", cutoff, "Score threshold (score >= cutoff is kept)");
    filter->add_option("--preset", preset, "Named kept-fraction preset (critic_low, critic_high, ...)")
        ->excludes(cutoff_opt);
    filter->add_option("--calibration", calibration_path, "Scores used to tune a preset (default --scores)");
    filter->add_option("--out", out_path, "Filtered corpus JSONL (default stdout)");

    // sweep
    std::string holdout_path;
    std::vector<std::string> train_paths;
    std::vector<double> cutoffs;
    auto* sweep = app.add_subcommand("sweep", "Size/precision table over several cutoffs");
    sweep->add_option("--config", config_path, "Run config JSON");
    sweep->add_option("--corpus", corpus_path, "Corpus JSONL (default paths.corpus)");
    sweep->add_option("--scores", scores_path, "Scores JSONL")->required();
    sweep->add_option("--holdout", holdout_path, "Labeled holdout JSONL")->required();
    sweep->add_option("--cutoffs", cutoffs, "Cutoff list")->delimiter(',')->required();
    sweep->add_option("--train", train_paths, "Labeled files the critic was trained on (contamination check)");
    sweep->add_option("--out", out_path, "Report JSON (default stdout)");

    // eval-critic
    double target_precision = 0.8;
    std::vector<double> grid;
    auto* eval = app.add_subcommand("eval-critic", "AP, recall at precision and precision curve");
    eval->add_option("--scores", scores_path, "Scores JSONL")->required();
    eval->add_option("--labels", labeled_path, "Labeled JSONL")->required();
    eval->add_option("--target-precision", target_precision, "Precision target for recall (default 0.8)");
    eval->add_option("--grid", grid, "Kept fractions for the precision curve")->delimiter(',');
    eval->add_option("--out", out_path, "Report JSON (default stdout)");

    // analyze
    std::string self_scorer;
    std::string cross_scorer;
    std::size_t sample_size = 1000;
    auto* analyze = app.add_subcommand("analyze", "Lexical diversity, soft uniqueness and entropy report");
    analyze->add_option("--config", config_path, "Run config JSON");
    analyze->add_option("--corpus", corpus_path, "Corpus JSONL (default paths.corpus)");
    analyze->add_option("--self-scorer", self_scorer, "NLL endpoint of a model trained on this corpus");
    analyze->add_option("--cross-scorer", cross_scorer, "NLL endpoint of a model trained on another corpus");
    analyze->add_option("--sample-size", sample_size, "Triples sampled for entropy estimation");
    analyze->add_option("--out", out_path, "Report JSON (default stdout)");

    // export
    auto* exp = app.add_subcommand("export", "Write student training lines");
    exp->add_option("--config", config_path, "Run config JSON");
    exp->add_option("--corpus", corpus_path, "Corpus JSONL (default paths.corpus)");
    exp->add_option("--out", out_path, "Training text file (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen_events->parsed()) {
            RunConfig cfg = RunConfig::load(config_path);
            if (target_override) cfg.plan.target_event_count = *target_override;
            const auto templates = TemplateSet::load(cfg.path("templates"));
            const auto pool = SeedPool::load(cfg.path("seed_pool"));
            CompletionClient client(cfg.endpoint);
            const auto run = generate_events(cfg.plan, pool, templates, client, cfg.timestamp());
            save_events(run.events, out_path.empty() ? cfg.path("events") : fs::path(out_path));
            warn_all(ctx, run.report.warnings);
            emit(ctx, report_path, dump_pretty(run.report.to_json()));
        } else if (gen_inf->parsed()) {
            const RunConfig cfg = RunConfig::load(config_path);
            const auto templates = TemplateSet::load(cfg.path("templates"));
            const auto generated = load_events(events_path.empty() ? cfg.path("events") : fs::path(events_path));
            std::vector<Event> events;
            events.reserve(generated.size());
            for (const auto& g : generated) events.push_back(g.event);
            CompletionClient client(cfg.endpoint);
            const auto run = generate_inferences(events, cfg.plan, templates, client, cfg.timestamp());
            save_corpus(run.corpus, out_path.empty() ? cfg.path("corpus") : fs::path(out_path));
            for (const auto& f : run.report.failures) ctx.err << "failed input: " << f << "\n";
            emit(ctx, report_path, dump_pretty(run.report.to_json()));
        } else if (labels_agg->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto raw = load_labels(pick(labels_path, cfg, "labels", "--labels"));
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            const auto labeled = aggregate_label_file(raw, corpus);
            std::string text;
            for (const auto& l : labeled) text += dump_line(to_json(l)) + "\n";
            emit(ctx, out_path, text);
        } else if (labels_split->parsed()) {
            const auto cfg = maybe_config(config_path);
            const std::uint64_t seed = split_seed ? *split_seed : (cfg ? cfg->rng_seed : 0);
            const auto split = split_labeled(load_labeled(labeled_path), seed);
            save_labeled(split.train, fs::path(out_dir) / "train.jsonl");
            save_labeled(split.dev, fs::path(out_dir) / "dev.jsonl");
            save_labeled(split.test, fs::path(out_dir) / "test.jsonl");
            Json summary{{"train", split.train.size()}, {"dev", split.dev.size()}, {"test", split.test.size()}};
            out << dump_pretty(summary);
        } else if (score->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            ScorerBinding binding;
            if (constant_score) {
                binding.kind = ScorerKind::constant;
                binding.value = *constant_score;
            } else {
                if (scorer_name.empty()) throw UsageError("score needs --scorer NAME or --constant VALUE");
                if (!cfg) throw UsageError("--scorer needs --config");
                const auto it = cfg->scorers.find(scorer_name);
                if (it == cfg->scorers.end()) throw UsageError("config has no scorer named " + scorer_name);
                binding = it->second;
            }
            const auto scores = score_corpus(corpus, binding, cfg ? cfg->scorer_http : HttpOptions{});
            std::string text;
            for (const auto& s : scores) text += dump_line(Json{{"triple_id", s.triple_id}, {"score", s.score}}) + "\n";
            emit(ctx, out_path, text);
        } else if (filter->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            const auto scores = load_scores(scores_path);
            double threshold = 0.0;
            if (cutoff) {
                threshold = *cutoff;
            } else if (!preset.empty()) {
                std::map<std::string, double> presets = cfg ? cfg->presets : RunConfig{}.presets;
                const auto it = presets.find(preset);
                if (it == presets.end()) throw UsageError("unknown preset " + preset);
                const auto calibration = calibration_path.empty() ? scores : load_scores(calibration_path);
                threshold = cutoff_for_kept_fraction(calibration, it->second);
                ctx.err << "preset " << preset << " (kept fraction " << it->second << ") -> cutoff " << threshold << "\n";
            } else {
                throw UsageError("filter needs --cutoff or --preset");
            }
            const auto kept = filter_at_threshold(corpus, index_scores(scores), threshold);
            emit(ctx, out_path, serialize_corpus(kept));
        } else if (sweep->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            const auto index = index_scores(load_scores(scores_path));
            const auto holdout = load_labeled(holdout_path);
            std::unordered_set<std::string> train_ids;
            for (const auto& p : train_paths) {
                for (const auto& l : load_labeled(p)) train_ids.insert(l.triple.id);
            }
            const auto report = sweep_report(corpus, index, holdout, cutoffs, train_ids);
            emit(ctx, out_path, dump_pretty(report.to_json()));
        } else if (eval->parsed()) {
            const auto index = index_scores(load_scores(scores_path));
            const auto items = join_labels(load_labeled(labeled_path), index);
            if (grid.empty()) grid = default_grid();
            emit(ctx, out_path, dump_pretty(evaluate_critic(items, target_precision, grid)));
        } else if (analyze->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            std::optional<EntropyReport> entropy;
            if (self_scorer.empty() != cross_scorer.empty()) {
                throw UsageError("entropy needs both --self-scorer and --cross-scorer");
            }
            if (!self_scorer.empty()) {
                const HttpOptions http = cfg ? cfg->scorer_http : HttpOptions{};
                HttpNllScorer self(self_scorer, http);
                HttpNllScorer cross(cross_scorer, http);
                const auto sample = sample_triples(corpus, sample_size, cfg ? cfg->rng_seed : 0);
                entropy = entropy_report(sample, self, cross);
                warn_all(ctx, entropy->warnings);
            }
            emit(ctx, out_path, dump_pretty(analytics_report(corpus, entropy)));
        } else if (exp->parsed()) {
            const auto cfg = maybe_config(config_path);
            const auto corpus = load_corpus(pick(corpus_path, cfg, "corpus", "--corpus"));
            std::string text;
            for (const auto& t : corpus.entries) text += export_line(t) + "\n";
            emit(ctx, out_path, text);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    }
    return 0;
}

}  // namespace kdist::cli
