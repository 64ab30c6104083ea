#include "demn/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "demn/error.hpp"
#include "demn/heatmap.hpp"
#include "demn/kernels.hpp"

namespace demn::cli {

namespace {

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const std::optional<std::filesystem::path>& p, const char* what) {
    if (p && !std::filesystem::is_regular_file(*p))
        throw MissingInput(std::string(what) + " file not found: " + p->string());
}

std::vector<data::LabeledStory> load_source(const DataSource& src) {
    if (src.csv) {
        require_file(src.csv, "data");
        auto report = data::load_rocstories(*src.csv, true);
        if (report.skipped_empty > 0)
            std::cerr << "warning: skipped " << report.skipped_empty << " rows with an empty sentence\n";
        return std::move(report.stories);
    }
    if (src.synthetic > 0) return data::gen_synthetic(src.synthetic, src.synthetic_vocab, src.synthetic_seed);
    throw MissingInput("no data given: pass --data <csv> or --synthetic <n>");
}

std::optional<data::AnnotationIndex> load_sidecar(const std::optional<std::filesystem::path>& path) {
    if (!path) return std::nullopt;
    require_file(path, "annotations");
    return data::load_annotations(*path);
}

std::vector<data::FeaturizedStory> featurize_all(const std::vector<data::LabeledStory>& stories,
                                                 const data::Vocab& vocab,
                                                 const std::optional<data::AnnotationIndex>& sidecar,
                                                 const data::TagTableSizes& tables) {
    std::vector<data::FeaturizedStory> out;
    out.reserve(stories.size());
    for (const auto& s : stories) {
        const data::Annotation* ann = nullptr;
        if (sidecar)
            if (auto it = sidecar->find(s.story_id); it != sidecar->end()) ann = &it->second;
        out.push_back(data::featurize(s, vocab, ann, tables));
    }
    return out;
}

std::string num(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// Stories, vocabulary and features shared by train and ablate.
struct Prepared {
    std::vector<data::LabeledStory> stories;
    std::vector<data::LabeledStory> test_stories;
    data::Vocab vocab;
    std::vector<data::FeaturizedStory> train_part, dev_part, test;
};

Prepared prepare(const DataSource& src, const std::optional<std::filesystem::path>& test_path,
                 const std::optional<std::filesystem::path>& embeddings,
                 const std::optional<std::filesystem::path>& annotations, const TrainConfig& cfg,
                 std::size_t d_w_flag, bool synthetic_test_fallback) {
    require_file(test_path, "test");
    require_file(embeddings, "embeddings");
    Prepared p;
    p.stories = load_source(src);
    if (test_path) {
        p.test_stories = data::load_rocstories(*test_path, true).stories;
    } else if (synthetic_test_fallback && !src.csv && src.synthetic > 0) {
        p.test_stories = data::gen_synthetic(src.synthetic, src.synthetic_vocab, src.synthetic_seed + 1000003);
    }
    const auto sidecar = load_sidecar(annotations);

    data::VocabOptions vo;
    vo.embeddings = embeddings;
    vo.d_w = d_w_flag != 0 ? d_w_flag : embeddings ? data::embedding_file_dim(*embeddings) : 50;
    vo.oov_bucket = true;
    vo.seed = cfg.seed;
    std::vector<data::LabeledStory> all = p.stories;
    all.insert(all.end(), p.test_stories.begin(), p.test_stories.end());
    p.vocab = data::build_vocab(all, vo);

    const auto feats = featurize_all(p.stories, p.vocab, sidecar, cfg.model.embedding.tables);
    std::tie(p.train_part, p.dev_part) = split_holdout(feats, cfg.seed);
    p.test = featurize_all(p.test_stories, p.vocab, sidecar, cfg.model.embedding.tables);
    return p;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const MissingInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

TrainConfig make_train_config(const ModelFlags& f) {
    TrainConfig c;
    c.batch_size = f.batch_size;
    c.lr = f.lr;
    c.max_epochs = f.epochs;
    c.seed = f.seed;
    c.model.hidden = f.hidden;
    c.model.mlp_hidden = f.mlp_hidden;
    AblationConfig& a = c.model.ablation;
    a.features = parse_features(f.features);
    a.deem = !f.no_deem;
    a.deeav = !f.no_deeav;
    a.distillation = !f.no_distill;
    a.exp_aware_climax = !(f.no_exp_aware_climax || f.no_exp_aware_both);
    a.exp_aware_option = !(f.no_exp_aware_option || f.no_exp_aware_both);
    c.validate();
    return c;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const TrainConfig cfg = make_train_config(args.model);
        require_file(args.annotations, "annotations");
        Prepared p = prepare(args.data, args.test, args.embeddings, args.annotations, cfg, args.model.d_w, false);

        const auto log_path = args.log ? *args.log : std::filesystem::path(args.out.string() + ".log.jsonl");
        std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
        if (!log) throw Error(ErrorKind::io, "cannot write " + log_path.string());

        Model model(cfg.model, p.vocab, cfg.seed);
        const TrainResult result = train(model, p.train_part, p.dev_part, cfg, [&](const EpochLog& e) {
            const nlohmann::json line = {
                {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"train_acc", e.train_acc}, {"dev_acc", e.dev_acc}, {"dev_loss", e.dev_loss}};
            log << line.dump() << '\n';
            out << "epoch " << e.epoch << " loss " << num(e.train_loss, "%.6f") << " train_acc "
                << num(e.train_acc, "%.4f") << " dev_acc " << num(e.dev_acc, "%.4f") << '\n';
        });
        save_checkpoint(args.out, model, p.vocab, {cfg, result.best_epoch, result.best_dev_acc});
        out << "best dev accuracy " << num(result.best_dev_acc, "%.4f") << " at epoch " << result.best_epoch << '\n';
        if (!p.test.empty()) out << "test accuracy " << num(evaluate(model, p.test).accuracy, "%.4f") << '\n';
        out << "checkpoint written to " << args.out.string() << '\n';
        return kExitOk;
    });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!std::filesystem::is_regular_file(args.checkpoint))
            throw MissingInput("checkpoint file not found: " + args.checkpoint.string());
        LoadedCheckpoint ck = load_checkpoint(args.checkpoint);
        const auto stories = load_source(args.data);
        const auto sidecar = load_sidecar(args.annotations);
        const auto feats = featurize_all(stories, ck.vocab, sidecar, ck.meta.config.model.embedding.tables);
        const EvalResult r = evaluate(*ck.model, feats);
        out << "accuracy " << num(r.accuracy, "%.4f") << '\n';
        if (args.predictions) {
            std::ofstream csv(*args.predictions, std::ios::binary | std::ios::trunc);
            if (!csv) throw Error(ErrorKind::io, "cannot write " + args.predictions->string());
            csv << "story_id,label,prediction,score1,score2,p1,p2\n";
            for (std::size_t i = 0; i < feats.size(); ++i) {
                const StoryScores& s = r.scores[i];
                csv << feats[i].story_id << ',' << feats[i].label << ',' << r.predictions[i] << ',' << num(s.score1)
                    << ',' << num(s.score2) << ',' << num(s.p1) << ',' << num(s.p2) << '\n';
            }
        }
        return kExitOk;
    });
}

int cmd_ablate(const AblateArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const TrainConfig base = make_train_config(args.model);
        Prepared p = prepare(args.data, args.test, args.embeddings, args.annotations, base, args.model.d_w, true);

        std::vector<NamedAblation> runs;
        const auto defaults = default_ablations();
        if (args.configs.empty()) {
            runs = defaults;
        } else {
            for (const auto& name : args.configs) {
                auto it = std::find_if(defaults.begin(), defaults.end(), [&](const auto& d) { return d.name == name; });
                if (it == defaults.end()) throw Error(ErrorKind::invalid_argument, "unknown ablation config " + name);
                runs.push_back(*it);
            }
        }

        std::ofstream csv(args.out, std::ios::binary | std::ios::trunc);
        if (!csv) throw Error(ErrorKind::io, "cannot write " + args.out.string());
        csv << "config,dev_acc,test_acc,param_count,status\n";
        for (const auto& run : runs) {
            std::string dev = "", test = "", count = "", status = "ok";
            try {
                TrainConfig cfg = base;
                cfg.model.ablation = run.config;
                Model model(cfg.model, p.vocab, cfg.seed);
                count = std::to_string(model.params().scalar_count());
                const TrainResult r = train(model, p.train_part, p.dev_part, cfg);
                dev = num(r.best_dev_acc, "%.4f");
                if (!p.test.empty()) test = num(evaluate(model, p.test).accuracy, "%.4f");
            } catch (const std::exception& e) {
                status = e.what();
                for (char& c : status)
                    if (c == ',' || c == '\n' || c == '"') c = ' ';
            }
            csv << run.name << ',' << dev << ',' << test << ',' << count << ',' << status << '\n';
            csv.flush();
            out << run.name << " dev " << (dev.empty() ? "-" : dev) << " test " << (test.empty() ? "-" : test)
                << " params " << (count.empty() ? "-" : count) << (status == "ok" ? "" : " FAILED: " + status)
                << '\n';
        }
        return kExitOk;
    });
}

int cmd_visualize(const VisualizeArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!std::filesystem::is_regular_file(args.checkpoint))
            throw MissingInput("checkpoint file not found: " + args.checkpoint.string());
        LoadedCheckpoint ck = load_checkpoint(args.checkpoint);
        const auto stories = load_source(args.data);
        auto it = std::find_if(stories.begin(), stories.end(),
                               [&](const data::LabeledStory& s) { return s.story_id == args.story_id; });
        if (it == stories.end()) throw Error(ErrorKind::unknown_story_id, "no story with id '" + args.story_id + "'");
        const auto sidecar = load_sidecar(args.annotations);
        const data::Annotation* ann = nullptr;
        if (sidecar)
            if (auto a = sidecar->find(it->story_id); a != sidecar->end()) ann = &a->second;
        const auto feats = data::featurize(*it, ck.vocab, ann, ck.meta.config.model.embedding.tables);
        const HeatmapDump dump = make_heatmap(*ck.model, *it, feats, args.ending);
        for (const auto& path : write_heatmaps(args.out, dump)) out << path.string() << '\n';
        return kExitOk;
    });
}

namespace {

void add_data_flags(CLI::App& app, DataSource& src, std::optional<std::filesystem::path>& annotations,
                    std::optional<std::uint64_t>& synthetic_seed) {
    app.add_option("--data", src.csv, "ROCStories-format CSV with labels");
    app.add_option("--synthetic", src.synthetic, "Generate N planted synthetic stories instead of --data");
    app.add_option("--synthetic-vocab", src.synthetic_vocab, "Filler vocabulary size for --synthetic");
    app.add_option("--synthetic-seed", synthetic_seed, "Seed for --synthetic (default: --seed)");
    app.add_option("--annotations", annotations, "JSON-lines POS/NER/relation sidecar");
}

void add_model_flags(CLI::App& app, ModelFlags& f) {
    app.add_option("--seed", f.seed, "Random seed");
    app.add_option("--epochs", f.epochs, "Epoch budget");
    app.add_option("--batch-size", f.batch_size, "Stories per Adam step");
    app.add_option("--lr", f.lr, "Adam learning rate");
    app.add_option("--hidden", f.hidden, "BiLSTM hidden size per direction");
    app.add_option("--mlp-hidden", f.mlp_hidden, "Scorer hidden size");
    app.add_option("--dw", f.d_w, "Word embedding width (default: embedding file width, else 50)");
    app.add_option("--features", f.features, "Matching features: c|s|m|cs|cm|sm|csm")
        ->check(CLI::IsMember({"c", "s", "m", "cs", "cm", "sm", "csm"}));
    app.add_flag("--no-deem", f.no_deem, "Zero initial memory instead of the distilled exposition");
    app.add_flag("--no-deeav", f.no_deeav, "Drop the exposition summary vector from the scorer");
    app.add_flag("--no-distill", f.no_distill, "Use raw exposition encodings instead of distilled ones");
    app.add_flag("--no-exp-aware-climax", f.no_exp_aware_climax, "Drop the climax factor from distillation scores");
    app.add_flag("--no-exp-aware-option", f.no_exp_aware_option, "Drop the option factor from distillation scores");
    app.add_flag("--no-exp-aware-both", f.no_exp_aware_both, "Drop both factors from distillation scores");
}

void resolve_seed(DataSource& src, const std::optional<std::uint64_t>& synthetic_seed, std::uint64_t seed) {
    src.synthetic_seed = synthetic_seed.value_or(seed);
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distilled-exposition matching network for two-choice story endings"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    TrainArgs train_args;
    std::optional<std::uint64_t> train_syn_seed;
    auto* train_cmd = app.add_subcommand("train", "Train on a labeled split and write a checkpoint");
    add_data_flags(*train_cmd, train_args.data, train_args.annotations, train_syn_seed);
    add_model_flags(*train_cmd, train_args.model);
    train_cmd->add_option("--test", train_args.test, "Labeled test CSV (reported only)");
    train_cmd->add_option("--embeddings", train_args.embeddings, "Pretrained word vectors (text format)");
    train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
    train_cmd->add_option("--log", train_args.log, "JSON-lines training log (default: <out>.log.jsonl)");

    EvalArgs eval_args;
    std::optional<std::uint64_t> eval_syn_seed;
    std::uint64_t eval_seed = 1;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on labeled stories");
    add_data_flags(*eval_cmd, eval_args.data, eval_args.annotations, eval_syn_seed);
    eval_cmd->add_option("--seed", eval_seed, "Seed for --synthetic");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint path")->required();
    eval_cmd->add_option("--out", eval_args.predictions, "Per-story predictions CSV");

    AblateArgs ablate_args;
    std::optional<std::uint64_t> ablate_syn_seed;
    std::string ablate_configs;
    auto* ablate_cmd = app.add_subcommand("ablate", "Train every ablation config and tabulate accuracies");
    add_data_flags(*ablate_cmd, ablate_args.data, ablate_args.annotations, ablate_syn_seed);
    add_model_flags(*ablate_cmd, ablate_args.model);
    ablate_cmd->add_option("--test", ablate_args.test, "Labeled test CSV");
    ablate_cmd->add_option("--embeddings", ablate_args.embeddings, "Pretrained word vectors (text format)");
    ablate_cmd->add_option("--configs", ablate_configs, "Comma-separated config names (default: all 16)");
    ablate_cmd->add_option("--out", ablate_args.out, "Comparison CSV path")->required();

    VisualizeArgs vis_args;
    std::optional<std::uint64_t> vis_syn_seed;
    std::uint64_t vis_seed = 1;
    auto* vis_cmd = app.add_subcommand("visualize", "Dump per-turn memory heatmaps for one story");
    add_data_flags(*vis_cmd, vis_args.data, vis_args.annotations, vis_syn_seed);
    vis_cmd->add_option("--seed", vis_seed, "Seed for --synthetic");
    vis_cmd->add_option("--checkpoint", vis_args.checkpoint, "Checkpoint path")->required();
    vis_cmd->add_option("--story-id", vis_args.story_id, "Story to visualize")->required();
    vis_cmd->add_option("--ending", vis_args.ending, "Ending index")->check(CLI::IsMember({1, 2}));
    vis_cmd->add_option("--out", vis_args.out, "Output directory")->required();

    auto* info_cmd = app.add_subcommand("info", "Print the selected numeric kernel backend");

    std::vector<const char*> raw;
    for (const auto& a : argv) raw.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return kExitOk;
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    if (train_cmd->parsed()) {
        resolve_seed(train_args.data, train_syn_seed, train_args.model.seed);
        return cmd_train(train_args, out, err);
    }
    if (eval_cmd->parsed()) {
        resolve_seed(eval_args.data, eval_syn_seed, eval_seed);
        return cmd_eval(eval_args, out, err);
    }
    if (ablate_cmd->parsed()) {
        resolve_seed(ablate_args.data, ablate_syn_seed, ablate_args.model.seed);
        std::stringstream ss(ablate_configs);
        for (std::string name; std::getline(ss, name, ',');)
            if (!name.empty()) ablate_args.configs.push_back(name);
        return cmd_ablate(ablate_args, out, err);
    }
    if (vis_cmd->parsed()) {
        resolve_seed(vis_args.data, vis_syn_seed, vis_seed);
        return cmd_visualize(vis_args, out, err);
    }
    if (info_cmd->parsed()) {
        out << "kernels " << kernels::name(kernels::active().backend) << '\n';
        out << "avx2 available " << (kernels::available(kernels::Backend::avx2) ? "yes" : "no") << '\n';
        return kExitOk;
    }
    return kExitUsage;
}

}  // namespace demn::cli
