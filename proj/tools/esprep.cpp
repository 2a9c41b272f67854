// esprep: command-line front end for the corpus preparation toolkit.
#include "esprep/clean.hpp"
#include "esprep/dedup.hpp"
#include "esprep/error.hpp"
#include "esprep/langid.hpp"
#include "esprep/metrics.hpp"
#include "esprep/noise.hpp"
#include "esprep/parallel.hpp"
#include "esprep/pipeline.hpp"
#include "esprep/taskprep.hpp"
#include "esprep/tokenizer.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace esprep;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

struct LineSink {
    std::ofstream file;
    std::ostream* out = &std::cout;

    explicit LineSink(const std::string& path) {
        if (path.empty() || path == "-") return;
        file.open(path, std::ios::binary | std::ios::trunc);
        if (!file) throw IoError("cannot open " + path + " for writing");
        out = &file;
    }
    void finish(const std::string& path) {
        out->flush();
        if (!*out) throw IoError("write failed on " + (path.empty() ? std::string("stdout") : path));
    }
};

void print_stats(const char* stage, const CorpusStats& s) {
    std::cerr << stage << ": docs_in=" << s.docs_in << " docs_out=" << s.docs_out;
    for (const auto& [rule, n] : s.rejects_by_rule) std::cerr << " " << rule << "=" << n;
    std::cerr << "\n";
}

std::map<std::string, std::string> parse_label_map(const std::string& spec) {
    std::map<std::string, std::string> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("label map entry '" + item + "' is not key=value");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    if (out.empty()) throw ConfigError("empty label map");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spanish corpus preparation: ingest, clean, dedup, tokenize, noise, taskprep, evaluate"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    unsigned workers = 0;
    app.add_option("-w,--workers", workers, "Worker threads (default: $ESPREP_WORKERS or 1)");
    std::function<void()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and assign stable ids");
    std::string in_path, out_path;
    IngestOptions ingest_opts;
    std::string ingest_format = "jsonl";
    ingest->add_option("-i,--input", in_path, "Input file")->required();
    ingest->add_option("-o,--output", out_path, "Output JSON-lines corpus")->required();
    ingest->add_option("--format", ingest_format, "jsonl, or text (blank-line separated documents)")
        ->check(CLI::IsMember({"jsonl", "text"}));
    ingest->add_option("--source", ingest_opts.source, "Source tag written on every document");
    ingest->callback([&] {
        action = [&] {
            ingest_opts.format = ingest_format == "text" ? IngestFormat::text : IngestFormat::jsonl;
            print_stats("ingest", ingest_file(in_path, out_path, ingest_opts));
        };
    });

    // clean
    auto* clean = app.add_subcommand("clean", "Quality filters and language gate");
    CleanSettings clean_settings;
    auto& cc = clean_settings.config;
    std::string lang_model, blocklist, abbreviations;
    clean->add_option("-i,--input", in_path)->required();
    clean->add_option("-o,--output", out_path)->required();
    clean->add_option("--min-chars", cc.min_chars)->capture_default_str();
    clean->add_option("--min-sentences", cc.min_sentences)->capture_default_str();
    clean->add_option("--max-char-run", cc.max_char_run)->capture_default_str();
    clean->add_option("--max-symbol-ratio", cc.max_symbol_ratio)->capture_default_str();
    clean->add_option("--max-top-char-ratio", cc.max_top_char_ratio)->capture_default_str();
    clean->add_option("--code-keyword-threshold", cc.code_keyword_threshold)->capture_default_str();
    clean->add_option("--lang-threshold", cc.lang_threshold)->capture_default_str();
    clean->add_option("--target-lang", cc.target_lang)->capture_default_str();
    clean->add_option("--lang-model", lang_model, "Language model JSON from `langid train`");
    clean->add_option("--blocklist", blocklist, "Blocked words, one per line");
    clean->add_option("--abbreviations", abbreviations, "Abbreviations, one per line");
    clean->add_flag("--repair", clean_settings.repair, "Fix encoding before judging");
    clean->callback([&] {
        action = [&] {
            if (!lang_model.empty()) clean_settings.lang_model = lang_model;
            if (!blocklist.empty()) clean_settings.blocklist = blocklist;
            if (!abbreviations.empty()) clean_settings.abbreviations = abbreviations;
            const Cleaner cleaner = make_cleaner(clean_settings);
            print_stats("clean", clean_file(in_path, out_path, cleaner, resolve_workers(workers)));
        };
    });

    // repair
    auto* repair = app.add_subcommand("repair", "Fix mojibake, NFKC-normalize and strip control characters");
    repair->add_option("-i,--input", in_path)->required();
    repair->add_option("-o,--output", out_path)->required();
    repair->callback([&] {
        action = [&] { print_stats("repair", repair_file(in_path, out_path, resolve_workers(workers))); };
    });

    // langid
    auto* langid = app.add_subcommand("langid", "Language identification model");
    langid->require_subcommand(1);
    auto* langid_train = langid->add_subcommand("train", "Train from seed text files");
    std::vector<std::string> seeds;
    langid_train->add_option("--seed", seeds, "code=path to a text file, one sentence per line (repeat)")->required();
    langid_train->add_option("-o,--output", out_path)->required();
    langid_train->callback([&] {
        action = [&] {
            std::map<std::string, std::vector<std::string>> texts;
            for (const auto& s : seeds) {
                const auto eq = s.find('=');
                if (eq == std::string::npos || eq == 0) throw ConfigError("--seed expects code=path, got '" + s + "'");
                auto& bucket = texts[s.substr(0, eq)];
                for (auto& line : read_lines(s.substr(eq + 1))) {
                    if (!line.empty()) bucket.push_back(std::move(line));
                }
            }
            LangModel::train(texts).save(out_path);
        };
    });
    auto* langid_detect = langid->add_subcommand("detect", "Print language and confidence per input line");
    langid_detect->add_option("-m,--model", lang_model)->required();
    langid_detect->add_option("-i,--input", in_path, "Text lines (default stdin)");
    langid_detect->callback([&] {
        action = [&] {
            const LangModel model = LangModel::load(lang_model);
            std::ifstream file;
            std::istream* in = &std::cin;
            if (!in_path.empty() && in_path != "-") {
                file.open(in_path, std::ios::binary);
                if (!file) throw IoError("cannot open " + in_path);
                in = &file;
            }
            std::string line;
            while (std::getline(*in, line)) {
                const auto g = model.detect(line);
                std::cout << g.code << '\t' << format_score(g.confidence) << '\n';
            }
        };
    });

    // dedup
    auto* dedup = app.add_subcommand("dedup", "Exact and MinHash-LSH near-duplicate removal");
    DedupConfig dcfg;
    std::string mode = "both", report_path, sig_path;
    dedup->add_option("-i,--input", in_path)->required();
    dedup->add_option("-o,--output", out_path)->required();
    dedup->add_option("--mode", mode)->check(CLI::IsMember({"exact", "near", "both"}))->capture_default_str();
    dedup->add_option("--shingle-words", dcfg.shingle_words)->capture_default_str();
    dedup->add_option("--num-perms", dcfg.num_perms)->capture_default_str();
    dedup->add_option("--bands", dcfg.bands)->capture_default_str();
    dedup->add_option("--rows", dcfg.rows)->capture_default_str();
    dedup->add_option("--seed", dcfg.seed)->capture_default_str();
    dedup->add_option("--report", report_path, "Write the DedupReport JSON here");
    dedup->add_option("--signatures", sig_path, "Persist MinHash signatures (MHSIG1)");
    dedup->callback([&] {
        action = [&] {
            dcfg.mode = parse_dedup_mode(mode);
            std::optional<std::filesystem::path> sigs;
            if (!sig_path.empty()) sigs = sig_path;
            const auto res = dedup_file(in_path, out_path, dcfg, resolve_workers(workers), sigs);
            print_stats("dedup", res.stats);
            if (!report_path.empty()) {
                std::ofstream rep(report_path, std::ios::binary | std::ios::trunc);
                rep << res.report.to_json() << '\n';
                if (!rep) throw IoError("cannot write " + report_path);
            }
        };
    });

    // tokenizer
    auto* tok = app.add_subcommand("tokenizer", "Train or apply a subword tokenizer");
    tok->require_subcommand(1);
    TokenizerSettings tsettings;
    std::string kind = "bpe", model_path;
    auto* tok_train = tok->add_subcommand("train", "Train BPE or unigram on a corpus");
    tok_train->add_option("-i,--input", in_path)->required();
    tok_train->add_option("-o,--output", out_path, "Model file")->required();
    tok_train->add_option("--kind", kind)->check(CLI::IsMember({"bpe", "unigram"}))->capture_default_str();
    tok_train->add_option("--vocab-size", tsettings.vocab_size)->capture_default_str();
    tok_train->add_flag("--sentinels", tsettings.sentinels, "Reserve 100 sentinel tokens (T5 profile)");
    tok_train->add_option("--max-piece-chars", tsettings.unigram.max_piece_chars)->capture_default_str();
    tok_train->add_option("--em-rounds", tsettings.unigram.em_rounds)->capture_default_str();
    tok_train->add_option("--prune-ratio", tsettings.unigram.prune_ratio)->capture_default_str();
    tok_train->callback([&] {
        action = [&] {
            tsettings.kind = parse_tokenizer_kind(kind);
            const Tokenizer t = train_tokenizer(in_path, tsettings, resolve_workers(workers));
            t.save(out_path);
            std::cerr << "tokenizer: " << to_string(t.kind()) << " vocab_size=" << t.size() << "\n";
        };
    });
    bool pieces = false;
    auto* tok_encode = tok->add_subcommand("encode", "Encode text lines to ids (or pieces)");
    tok_encode->add_option("-m,--model", model_path)->required();
    tok_encode->add_option("-i,--input", in_path, "Text lines (default stdin)");
    tok_encode->add_option("-o,--output", out_path, "Output (default stdout)");
    tok_encode->add_flag("--pieces", pieces, "Print pieces instead of ids");
    auto* tok_decode = tok->add_subcommand("decode", "Decode space-separated id lines to text");
    tok_decode->add_option("-m,--model", model_path)->required();
    tok_decode->add_option("-i,--input", in_path, "Id lines (default stdin)");
    tok_decode->add_option("-o,--output", out_path, "Output (default stdout)");
    auto stream_lines = [&](auto&& fn) {
        const Tokenizer t = Tokenizer::load(model_path);
        std::ifstream file;
        std::istream* in = &std::cin;
        if (!in_path.empty() && in_path != "-") {
            file.open(in_path, std::ios::binary);
            if (!file) throw IoError("cannot open " + in_path);
            in = &file;
        }
        LineSink sink(out_path);
        std::string line;
        std::uint64_t n = 0;
        while (std::getline(*in, line)) fn(t, line, ++n, *sink.out);
        sink.finish(out_path);
    };
    tok_encode->callback([&] {
        action = [&] {
            stream_lines([&](const Tokenizer& t, const std::string& line, std::uint64_t, std::ostream& out) {
                if (pieces) {
                    const auto ps = t.encode_pieces(line);
                    for (std::size_t i = 0; i < ps.size(); ++i) out << (i ? " " : "") << ps[i];
                } else {
                    const auto seq = t.encode(line);
                    for (std::size_t i = 0; i < seq.ids.size(); ++i) out << (i ? " " : "") << seq.ids[i];
                }
                out << '\n';
            });
        };
    });
    tok_decode->callback([&] {
        action = [&] {
            stream_lines([&](const Tokenizer& t, const std::string& line, std::uint64_t n, std::ostream& out) {
                std::vector<TokenId> ids;
                std::istringstream ss(line);
                std::string field;
                while (ss >> field) {
                    try {
                        std::size_t used = 0;
                        const unsigned long v = std::stoul(field, &used);
                        if (used != field.size()) throw std::invalid_argument(field);
                        ids.push_back(static_cast<TokenId>(v));
                    } catch (const std::exception&) {
                        throw DataError("line " + std::to_string(n) + ": '" + field + "' is not a token id");
                    }
                }
                out << t.decode(ids) << '\n';
            });
        };
    });

    // noise
    auto* noise = app.add_subcommand("noise", "Generate denoising pretraining pairs");
    NoiseConfig ncfg;
    std::string objective = "bart";
    bool no_permute = false;
    noise->add_option("-i,--input", in_path)->required();
    noise->add_option("-o,--output", out_path)->required();
    noise->add_option("-m,--tokenizer", model_path)->required();
    noise->add_option("--objective", objective)->check(CLI::IsMember({"bart", "t5"}))->capture_default_str();
    noise->add_option("--mask-rate", ncfg.mask_rate)->capture_default_str();
    noise->add_option("--span-lambda", ncfg.span_lambda)->capture_default_str();
    noise->add_flag("--no-permute", no_permute, "Disable sentence permutation");
    noise->add_option("--corruption-rate", ncfg.corruption_rate)->capture_default_str();
    noise->add_option("--mean-span", ncfg.mean_span)->capture_default_str();
    noise->add_option("--max-len", ncfg.max_len)->capture_default_str();
    noise->add_option("--min-chunk", ncfg.min_chunk)->capture_default_str();
    noise->add_option("--seed", ncfg.seed)->capture_default_str();
    noise->callback([&] {
        action = [&] {
            ncfg.objective = parse_noise_objective(objective);
            ncfg.permute_sentences = !no_permute;
            ncfg.validate();
            const Tokenizer t = Tokenizer::load(model_path);
            const auto s = noise_file(in_path, out_path, t, ncfg, resolve_workers(workers));
            std::cerr << "noise: docs=" << s.docs << " pairs=" << s.pairs << " chunk_tokens=" << s.chunk_tokens
                      << " noised_tokens=" << s.noised_tokens << "\n";
        };
    });

    // taskprep
    auto* taskprep = app.add_subcommand("taskprep", "Format downstream datasets as source/target pairs");
    TaskOptions topts;
    std::string task, direction = "forward", label_map;
    taskprep->add_option("--task", task)
        ->required()
        ->check(CLI::IsMember({"summarization", "qa", "split_rephrase", "dialogue", "translation", "classification"}));
    taskprep->add_option("-i,--input", in_path)->required();
    taskprep->add_option("-o,--output", out_path)->required();
    taskprep->add_option("--template", topts.qa_template, "QA template with {q} and {c}")->capture_default_str();
    taskprep->add_option("--sep", topts.sep, "Split-and-rephrase separator")->capture_default_str();
    taskprep->add_option("--history-max", topts.history_max, "Dialogue context window (0: unlimited)");
    taskprep->add_option("--direction", direction)->check(CLI::IsMember({"forward", "reverse"}));
    taskprep->add_option("--task-name", topts.classification.task_name)->capture_default_str();
    taskprep->add_option("--label-map", label_map, "label=word,... for classification");
    taskprep->add_flag("--regression", topts.classification.regression, "Target is the score to one decimal");
    taskprep->callback([&] {
        action = [&] {
            topts.task = parse_task_kind(task);
            topts.direction = direction == "reverse" ? Direction::reverse : Direction::forward;
            if (!label_map.empty()) topts.classification.label_map = parse_label_map(label_map);
            const auto s = taskprep_file(in_path, out_path, topts);
            std::cerr << "taskprep: examples=" << s.examples << " pairs=" << s.pairs << " warnings=" << s.warnings
                      << "\n";
        };
    });

    // evaluate
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against references");
    std::vector<std::string> metric_names{"rouge"}, refs;
    std::string pred_path, src_path, json_path;
    BleuOptions bleu_opts;
    evaluate_cmd->add_option("--metric", metric_names, "rouge,bleu,sari,meteor,f1")->delimiter(',');
    evaluate_cmd->add_option("--pred", pred_path)->required();
    evaluate_cmd->add_option("--ref", refs, "Reference file; repeat for multiple references")->required();
    evaluate_cmd->add_option("--src", src_path, "Sources (needed by sari)");
    evaluate_cmd->add_flag("--smooth", bleu_opts.smooth, "Add-one smoothing for BLEU orders above 1");
    evaluate_cmd->add_option("--json", json_path, "Write MetricReport JSON lines here");
    evaluate_cmd->callback([&] {
        action = [&] {
            EvalInput input;
            input.predictions = read_lines(pred_path);
            for (const auto& r : refs) input.references.push_back(read_lines(r));
            if (!src_path.empty()) input.sources = read_lines(src_path);
            const auto reports = evaluate(input, metric_names, bleu_opts);
            std::cout << render_table(reports);
            if (!json_path.empty()) {
                std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
                for (const auto& r : reports) out << r.to_json() << '\n';
                if (!out) throw IoError("cannot write " + json_path);
            }
        };
    });

    // run
    auto* run = app.add_subcommand("run", "Run the configured pipeline");
    std::string config_path, stages, output_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    run->add_option("-c,--config", config_path, "Pipeline config file (defaults apply when omitted)");
    run->add_option("--set", overrides, "section.key=value override (repeatable)");
    run->add_option("--input", in_path, "Overrides input");
    run->add_option("--output-dir", output_dir, "Overrides output_dir");
    run->add_option("--stages", stages, "Overrides stages (comma-separated)");
    run->add_option("--seed", seed, "Overrides seed");
    run->callback([&] {
        action = [&] {
            PipelineConfig cfg = config_path.empty() ? PipelineConfig::parse("") : PipelineConfig::load(config_path);
            if (!in_path.empty()) cfg.set("input=" + in_path);
            if (!output_dir.empty()) cfg.set("output_dir=" + output_dir);
            if (!stages.empty()) cfg.set("stages=" + stages);
            if (seed) cfg.set("seed=" + std::to_string(*seed));
            for (const auto& o : overrides) cfg.set(o);
            if (workers > 0) cfg.workers = workers;
            std::cout << report(run_pipeline(cfg));
        };
    });

    // report
    auto* report_cmd = app.add_subcommand("report", "Summarize a run manifest");
    std::string manifest_path;
    report_cmd->add_option("manifest", manifest_path, "manifest.json")->required();
    report_cmd->callback([&] {
        action = [&] {
            std::ifstream in(manifest_path, std::ios::binary);
            if (!in) throw IoError("cannot open " + manifest_path);
            std::stringstream ss;
            ss << in.rdbuf();
            std::cout << report(RunManifest::from_json(ss.str()));
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::config);
    }
    try {
        if (action) action();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::data);
    }
    return 0;
}
