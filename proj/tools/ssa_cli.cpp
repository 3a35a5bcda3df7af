// Command-line front end for the augmentation pipeline and its stages.

#include <cstdio>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "ssa/amr.hpp"
#include "ssa/augment.hpp"
#include "ssa/error.hpp"
#include "ssa/io.hpp"
#include "ssa/merge.hpp"
#include "ssa/metrics.hpp"
#include "ssa/pipeline.hpp"
#include "ssa/sampler.hpp"
#include "ssa/smatch.hpp"

namespace {

using namespace ssa;

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::External: return 4;
  }
  return 1;
}

std::vector<AmrGraph> read_graphs(const std::string& path) {
  std::vector<AmrGraph> out;
  for (const auto& b : split_penman_blocks(read_text_file(path))) out.push_back(parse_penman(b.text));
  return out;
}

void print_prf(double p, double r, double f) {
  std::printf("Precision: %.4f\nRecall: %.4f\nF-score: %.4f\n", p, r, f);
}

std::vector<GroundedCaptionRecord> read_records(const std::string& path) {
  return parse_lines<GroundedCaptionRecord>(read_jsonl(path), record_from_json);
}

std::vector<ControlCaptionPair> read_pairs(const std::string& path) {
  return parse_lines<ControlCaptionPair>(read_jsonl(path), pair_from_json);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured semantic augmentation for controllable captioning"};
  app.require_subcommand(1);
  std::string stage = "cli";

  // parse
  std::string parse_in;
  bool parse_triples = false;
  auto* parse = app.add_subcommand("parse", "Parse PENMAN blocks and print them canonically");
  parse->add_option("--input", parse_in, "PENMAN file")->required();
  parse->add_flag("--triples", parse_triples, "Print triples instead of PENMAN");

  // smatch
  std::string sm_a, sm_b;
  int sm_restarts = kDefaultSmatchRestarts;
  uint64_t sm_seed = 0;
  bool sm_brute = false;
  auto* smatch = app.add_subcommand("smatch", "Smatch between corresponding PENMAN blocks");
  smatch->add_option("--a", sm_a)->required();
  smatch->add_option("--b", sm_b)->required();
  smatch->add_option("--restarts", sm_restarts)->check(CLI::PositiveNumber);
  smatch->add_option("--seed", sm_seed);
  smatch->add_flag("--brute-force", sm_brute, "Exact search (small graphs only)");

  // ground
  std::string gr_in, gr_out, gr_pairs;
  auto* ground = app.add_subcommand("ground", "Build visually grounded AMRs from records");
  ground->add_option("--input", gr_in)->required();
  ground->add_option("--out", gr_out)->required();
  ground->add_option("--pairs", gr_pairs, "Also write the original control-caption pairs");

  // merge
  std::string mg_in, mg_emb, mg_out;
  MergeParams mg_params;
  int mg_restarts = kDefaultSmatchRestarts;
  uint64_t mg_seed = 0;
  size_t mg_threads = 1;
  auto* merge = app.add_subcommand("merge", "Merge each image's captions into a meta graph");
  merge->add_option("--input", mg_in)->required();
  merge->add_option("--embeddings", mg_emb)->required();
  merge->add_option("--out", mg_out)->required();
  merge->add_option("--syn-th", mg_params.synonym_threshold);
  merge->add_option("--pred-th", mg_params.predicate_threshold);
  merge->add_option("--restarts", mg_restarts)->check(CLI::PositiveNumber);
  merge->add_option("--seed", mg_seed);
  merge->add_option("--threads", mg_threads)->check(CLI::PositiveNumber);

  // sample
  std::string sa_meta, sa_out;
  uint64_t sa_seed = 0;
  auto* sample = app.add_subcommand("sample", "Sample event subgraphs from meta graphs");
  sample->add_option("--meta", sa_meta)->required();
  sample->add_option("--seed", sa_seed);
  sample->add_option("--out", sa_out)->required();

  // augment
  std::string au_meta, au_samples, au_out, au_dropped;
  std::string au_generator = "stub", au_scorer = "const:1.0";
  double au_th = kDefaultQualityThreshold;
  uint64_t au_seed = 0;
  size_t au_in_flight = 8, au_threads = 1;
  auto* augment = app.add_subcommand("augment", "Realize samples into filtered control-caption pairs");
  auto* au_meta_opt = augment->add_option("--meta", au_meta, "Meta graphs (sampled with --seed)");
  auto* au_samples_opt = augment->add_option("--samples", au_samples, "Pre-sampled subgraphs");
  au_meta_opt->excludes(au_samples_opt);
  augment->add_option("--generator", au_generator, "stub | bridge:ADDR");
  augment->add_option("--scorer", au_scorer, "const:X | bridge:ADDR");
  augment->add_option("--gruen-th", au_th);
  augment->add_option("--seed", au_seed);
  augment->add_option("--max-in-flight", au_in_flight)->check(CLI::PositiveNumber);
  augment->add_option("--threads", au_threads)->check(CLI::PositiveNumber);
  augment->add_option("--out", au_out)->required();
  augment->add_option("--dropped", au_dropped, "Write filtered-out pairs here");

  // mix
  std::string mx_orig, mx_ssa, mx_out, mx_strategy = "random";
  MixSpec mx_spec;
  auto* mix = app.add_subcommand("mix", "Mix original and SSA pairs");
  mix->add_option("--original", mx_orig)->required();
  mix->add_option("--ssa", mx_ssa)->required();
  mix->add_option("--strategy", mx_strategy)->check(CLI::IsMember({"random", "uniform"}));
  mix->add_option("--p", mx_spec.percentage);
  mix->add_option("--bins", mx_spec.bins);
  mix->add_option("--seed", mx_spec.seed);
  mix->add_option("--out", mx_out)->required();

  // eval
  std::string ev_pairs, ev_controls, ev_emb, ev_nouns = "annotated", ev_report;
  int ev_bands = 10;
  auto* eval = app.add_subcommand("eval", "Compute the controllability and diversity metrics");
  eval->add_option("--pairs", ev_pairs, "Generated captions (JSONL)")->required();
  eval->add_option("--controls", ev_controls, "Control-caption pairs; omit if --pairs holds them");
  eval->add_option("--embeddings", ev_emb)->required();
  eval->add_option("--nouns", ev_nouns, "lexicon:FILE | annotated");
  eval->add_option("--report", ev_report)->required();
  eval->add_option("--bands", ev_bands)->check(CLI::PositiveNumber);

  // run
  std::string run_config;
  std::vector<std::string> run_sets;
  std::string run_out, run_generator, run_scorer;
  std::optional<uint64_t> run_seed;
  std::optional<double> run_th;
  auto* run = app.add_subcommand("run", "Run the whole pipeline from a config file");
  run->add_option("--config", run_config)->required();
  run->add_option("--set", run_sets, "Override a config key: KEY=VALUE");
  run->add_option("--out-dir", run_out);
  run->add_option("--seed", run_seed);
  run->add_option("--generator", run_generator);
  run->add_option("--scorer", run_scorer);
  run->add_option("--gruen-th", run_th);

  // report
  std::string rp_in, rp_csv;
  auto* report = app.add_subcommand("report", "Render report.json as a table and band CSV");
  report->add_option("--report", rp_in)->required();
  report->add_option("--csv", rp_csv, "Write the band CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*parse) {
      stage = "parse";
      for (const auto& b : split_penman_blocks(read_text_file(parse_in))) {
        const AmrGraph g = parse_penman(b.text);
        for (const auto& c : b.comments) std::cout << c << '\n';
        if (parse_triples) {
          for (const auto& t : to_triples(g))
            std::cout << t.label << '(' << t.head << ", " << t.tail << ")\n";
        } else {
          std::cout << serialize_penman(g) << '\n';
        }
        std::cout << '\n';
      }
    } else if (*smatch) {
      stage = "smatch";
      const auto as = read_graphs(sm_a), bs = read_graphs(sm_b);
      if (as.size() != bs.size())
        throw LengthMismatch(std::to_string(as.size()) + " graphs vs " + std::to_string(bs.size()));
      long matched = 0, ta = 0, tb = 0;
      for (size_t i = 0; i < as.size(); ++i) {
        const SmatchResult r =
            sm_brute ? smatch_brute_force(as[i], bs[i]) : smatch_score(as[i], bs[i], sm_restarts, sm_seed);
        matched += r.matched_triples;
        ta += r.triples_a;
        tb += r.triples_b;
      }
      const double p = ta ? double(matched) / ta : 0.0, r = tb ? double(matched) / tb : 0.0;
      print_prf(p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0);
    } else if (*ground) {
      stage = "ground";
      std::vector<Json> lines;
      std::vector<ControlCaptionPair> pairs;
      for (const auto& r : read_records(gr_in)) {
        VgAmr g = build_vgamr(r);
        if (!gr_pairs.empty()) pairs.push_back(original_pair(r, g));
        Json j = to_json(ImageGraph{r.image_id, r.image_width, r.image_height, std::move(g)});
        j["caption_id"] = r.caption_id;
        lines.push_back(std::move(j));
      }
      write_jsonl(gr_out, lines);
      if (!gr_pairs.empty()) write_jsonl(gr_pairs, to_json_lines(pairs));
    } else if (*merge) {
      stage = "merge";
      mg_params.validate();
      const auto records = read_records(mg_in);
      const auto store = EmbeddingStore::load(mg_emb);
      std::vector<std::string> warnings;
      const auto metas =
          merge_images(records, store, mg_params, mg_restarts, mg_seed, mg_threads, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: no embedding for '" << w << "'\n";
      write_jsonl(mg_out, to_json_lines(metas));
    } else if (*sample) {
      stage = "sample";
      const auto metas = parse_lines<ImageGraph>(read_jsonl(sa_meta), image_graph_from_json);
      write_jsonl(sa_out, to_json_lines(sample_images(metas, sa_seed, 1)));
    } else if (*augment) {
      stage = "augment";
      if (!(au_th >= 0 && au_th <= 1)) throw ConfigError("--gruen-th must lie in [0, 1]");
      std::vector<ImageSample> samples;
      if (!au_samples.empty()) {
        samples = parse_lines<ImageSample>(read_jsonl(au_samples), image_sample_from_json);
      } else if (!au_meta.empty()) {
        const auto metas = parse_lines<ImageGraph>(read_jsonl(au_meta), image_graph_from_json);
        samples = sample_images(metas, au_seed, au_threads);
      } else {
        throw ConfigError("augment needs --meta or --samples");
      }
      Endpoints e = make_endpoints(au_generator, au_scorer, au_in_flight);
      const AugmentResult r = augment_samples(samples, *e.generator, *e.scorer, au_th, au_threads);
      write_jsonl(au_out, to_json_lines(r.kept));
      if (!au_dropped.empty()) write_jsonl(au_dropped, to_json_lines(r.dropped));
      std::cerr << r.kept.size() << " kept, " << r.dropped.size() << " dropped, "
                << r.ungrounded_samples << " samples without grounded nodes\n";
    } else if (*mix) {
      stage = "mix";
      mx_spec.strategy = mx_strategy == "uniform" ? MixStrategy::UniformCoverage : MixStrategy::Random;
      mx_spec.validate();
      write_jsonl(mx_out, to_json_lines(mix_datasets(read_pairs(mx_orig), read_pairs(mx_ssa), mx_spec)));
    } else if (*eval) {
      stage = "eval";
      std::unique_ptr<NounExtractor> nouns;
      if (ev_nouns == "annotated")
        nouns = std::make_unique<AnnotatedNounExtractor>();
      else if (ev_nouns.rfind("lexicon:", 0) == 0)
        nouns = std::make_unique<LexiconNounExtractor>(LexiconNounExtractor::load(ev_nouns.substr(8)));
      else
        throw ConfigError("--nouns must be lexicon:FILE or annotated");

      const auto generated = read_jsonl(ev_pairs);
      std::vector<EvalItem> items;
      if (ev_controls.empty()) {
        items = eval_items(parse_lines<ControlCaptionPair>(generated, pair_from_json));
      } else {
        const auto controls = read_pairs(ev_controls);
        if (controls.size() != generated.size())
          throw LengthMismatch(std::to_string(generated.size()) + " captions vs " +
                               std::to_string(controls.size()) + " controls");
        items = eval_items(controls);
        for (size_t i = 0; i < items.size(); ++i) {
          const Json& g = generated[i];
          try {
            items[i].caption = g.at("caption").get<std::string>();
            if (g.contains("nouns")) items[i].annotated_nouns = g["nouns"].get<std::vector<std::string>>();
            items[i].quality = g.contains("quality") && !g["quality"].is_null()
                                   ? std::optional<double>(g["quality"].get<double>())
                                   : std::nullopt;
          } catch (const Json::exception& e) {
            throw SchemaError("line " + std::to_string(i + 1) + ": " + e.what());
          }
        }
      }
      const auto store = EmbeddingStore::load(ev_emb);
      write_text_file(ev_report, to_json(evaluate(items, *nouns, store, ev_bands)).dump(2) + "\n");
    } else if (*run) {
      stage = "config";
      PipelineConfig config = load_config(run_config);
      for (const auto& kv : run_sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (!run_out.empty()) config.out_dir = run_out;
      if (run_seed) config.seed = *run_seed;
      if (!run_generator.empty()) config.generator = run_generator;
      if (!run_scorer.empty()) config.scorer = run_scorer;
      if (run_th) config.gruen_threshold = *run_th;
      const PipelineSummary s = run_pipeline(config, &stage);
      std::cout << s.records << " records, " << s.images << " images, " << s.samples
                << " samples, " << s.kept << " kept, " << s.dropped << " dropped, " << s.mixed
                << " mixed pairs -> " << config.out_dir.string() << '\n';
    } else if (*report) {
      stage = "report";
      Json j;
      try {
        j = Json::parse(read_text_file(rp_in));
      } catch (const Json::parse_error& e) {
        throw SchemaError(e.what());
      }
      const RenderedReport r = render_report(j);
      std::cout << r.table;
      if (rp_csv.empty())
        std::cout << '\n' << r.band_csv;
      else
        write_text_file(rp_csv, r.band_csv);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage << "]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
