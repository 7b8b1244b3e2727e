// wgram: compile templates, build request machines, and run the decoding harness.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wgram/backend.hpp"
#include "wgram/error.hpp"
#include "wgram/frontend.hpp"
#include "wgram/harness.hpp"
#include "wgram/pattern.hpp"
#include "wgram/regex.hpp"
#include "wgram/templates.hpp"

namespace {

using namespace wgram;

enum Exit { kOk = 0, kValidation = 1, kInput = 2, kCompile = 3 };

struct SourceOptions {
  std::string structures;
  std::string vocab;
  std::string request;
  std::string format;
  std::vector<std::string> args;
  std::string pattern;

  void attach(CLI::App* cmd, bool need_vocab = true) {
    auto* v = cmd->add_option("--vocab", vocab, "vocabulary file")->check(CLI::ExistingFile);
    if (need_vocab) v->required();
    cmd->add_option("--structures,--templates", structures, ".wgram template file or factory dump")
        ->check(CLI::ExistingFile);
    cmd->add_option("--request", request, "JSON request document")->check(CLI::ExistingFile);
    cmd->add_option("--format", format, "request format expression");
    cmd->add_option("--arg", args, "request argument name=value (repeatable)");
    cmd->add_option("--pattern", pattern, "decode against a single regex instead of a request");
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct Loaded {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const StructureFactory> factory;
  RequestDocument request;
  std::string pattern;

  TreeSource source() const {
    if (!pattern.empty()) {
      return [this] { return compile_regex(parse_regex(pattern), *vocab); };
    }
    return [this] { return build_operators(parse_request(request, *factory), *factory, *vocab); };
  }
};

Loaded load(const SourceOptions& o) {
  Loaded l;
  l.vocab = std::make_shared<const Vocabulary>(load_vocabulary(o.vocab));
  if (!o.pattern.empty()) {
    if (!o.request.empty() || !o.format.empty()) throw InputError("--pattern excludes --request and --format");
    l.pattern = o.pattern;
    return l;
  }
  if (o.structures.empty()) throw InputError("--structures is required unless --pattern is given");
  l.factory = std::make_shared<const StructureFactory>(load_structures(o.structures, *l.vocab));
  if (!o.request.empty() == !o.format.empty()) throw InputError("give exactly one of --request and --format");
  l.request = o.request.empty() ? RequestDocument{o.format, {}} : parse_request_document(read_file(o.request));
  for (const auto& a : o.args) {
    auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--arg expects name=value, got '" + a + "'");
    l.request.args[a.substr(0, eq)] = a.substr(eq + 1);
  }
  return l;
}

std::string hex(const std::vector<std::uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

std::string stats_json(const FactoryStats& s) {
  nlohmann::json j = {{"structures", s.structures},
                      {"terminals", s.terminals},
                      {"placeholders", s.placeholders},
                      {"compile_ms", s.compile_ms}};
  return j.dump(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-based constrained decoding engine"};
  app.require_subcommand(1);

  auto* compile = app.add_subcommand("compile", "compile a .wgram template file into a factory dump");
  std::string templates, vocab_path, factory_out, stats_out;
  compile->add_option("--templates", templates, ".wgram template file")->required()->check(CLI::ExistingFile);
  compile->add_option("--vocab", vocab_path, "vocabulary file")->required()->check(CLI::ExistingFile);
  compile->add_option("-o,--output", factory_out, "factory dump path (default: stdout)");
  compile->add_option("--stats", stats_out, "write factory stats JSON here instead of stderr");

  SourceOptions build_opts;
  auto* build = app.add_subcommand("build", "build the operator tree for a request");
  build_opts.attach(build);
  bool build_dump = false, build_parsed = false;
  build->add_flag("--dump", build_dump, "print the operator tree");
  build->add_flag("--parsed", build_parsed, "print the parsed request expression");

  auto* rex = app.add_subcommand("rex", "compile one regex to an operator tree");
  std::string rex_pattern, rex_vocab;
  bool rex_dump = false;
  rex->add_option("--pattern", rex_pattern, "regex")->required();
  rex->add_option("--vocab", rex_vocab, "vocabulary file")->required()->check(CLI::ExistingFile);
  rex->add_flag("--dump", rex_dump, "print the operator tree");

  SourceOptions run_opts;
  DecodeConfig run_cfg;
  bool run_json = false;
  auto* run = app.add_subcommand("run", "simulate decoding with a seeded sampler");
  run_opts.attach(run);
  run->add_option("--seed", run_cfg.seed, "sampler seed");
  run->add_option("--max-tokens", run_cfg.max_tokens, "hard stop")->check(CLI::PositiveNumber);
  run->add_option("--eos-bias", run_cfg.eos_bias, "chance of picking eos when permitted")->check(CLI::Range(0.0, 1.0));
  run->add_flag("--json", run_json, "print a JSON record");

  SourceOptions replay_opts;
  std::string stream_path, masks_out;
  bool replay_json = false;
  auto* replay = app.add_subcommand("replay", "validate a recorded token stream");
  replay_opts.attach(replay);
  replay->add_option("--stream", stream_path, "one decimal token id per line")->required()->check(CLI::ExistingFile);
  replay->add_option("--masks", masks_out, "write the packed mask before each token, hex, one per line");
  replay->add_flag("--json", replay_json, "print a JSON record");

  SourceOptions bench_opts;
  DecodeConfig bench_cfg;
  std::size_t reps = 10, threads = 1;
  bool bench_json = false;
  auto* bench_cmd = app.add_subcommand("bench", "stage breakdown over repeated decodes");
  bench_opts.attach(bench_cmd);
  bench_cmd->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_cfg.seed, "sampler seed");
  bench_cmd->add_option("--max-tokens", bench_cfg.max_tokens, "hard stop")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--eos-bias", bench_cfg.eos_bias, "chance of picking eos when permitted")
      ->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_flag("--json", bench_json, "print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*compile) {
      Vocabulary vocab = load_vocabulary(vocab_path);
      StructureFactory f = compile_templates_file(templates, vocab);
      std::string dumped = dump_factory(f);
      if (factory_out.empty()) {
        std::cout << dumped;
      } else {
        write_file(factory_out, dumped);
      }
      std::string stats = stats_json(f.stats()) + "\n";
      if (stats_out.empty()) {
        std::cerr << stats;
      } else {
        write_file(stats_out, stats);
      }
      return kOk;
    }
    if (*build) {
      Loaded l = load(build_opts);
      if (build_parsed && l.factory) std::cout << to_string(parse_request(l.request, *l.factory)) << "\n";
      OperatorPtr tree = l.source()();
      if (build_dump) {
        std::cout << dump(tree);
      } else if (!build_parsed) {
        std::cout << "ok: operator tree depth " << tree->depth() << "\n";
      }
      return kOk;
    }
    if (*rex) {
      Vocabulary vocab = load_vocabulary(rex_vocab);
      OperatorPtr tree = compile_regex(parse_regex(rex_pattern), vocab);
      std::cout << (rex_dump ? dump(tree) : "ok\n");
      return kOk;
    }
    if (*run) {
      Loaded l = load(run_opts);
      DecodeResult r = mock_decode(l.source(), *l.vocab, run_cfg);
      if (run_json) {
        nlohmann::json j = {{"tokens", r.tokens},
                            {"text", l.vocab->detokenize(r.tokens)},
                            {"report", nlohmann::json::parse(r.report.to_json())}};
        std::cout << j.dump(2) << "\n";
      } else {
        for (auto t : r.tokens) std::cout << t << "\n";
        std::cerr << (r.report.finished ? "finished" : "stopped at max tokens") << " after "
                  << r.report.tokens_generated << " tokens\n";
      }
      return kOk;
    }
    if (*replay) {
      Loaded l = load(replay_opts);
      std::vector<TokenId> stream = load_token_stream(stream_path, l.vocab->size());
      ReplayResult r = replay_decode(stream, l.source(), *l.vocab);
      if (!masks_out.empty()) {
        std::string text;
        for (const auto& m : r.masks) text += hex(m) + "\n";
        write_file(masks_out, text);
      }
      if (replay_json) {
        nlohmann::json trace = nlohmann::json::array();
        for (auto o : r.trace) trace.push_back(to_string(o));
        nlohmann::json j = {{"accepted", r.accepted},
                            {"violation", r.violation ? nlohmann::json(*r.violation) : nlohmann::json(nullptr)},
                            {"reason", r.reason},
                            {"trace", trace},
                            {"report", nlohmann::json::parse(r.report.to_json())}};
        std::cout << j.dump(2) << "\n";
      } else if (r.accepted) {
        std::cout << "accepted " << stream.size() << " tokens\n";
      } else {
        std::cout << "rejected at position " << *r.violation << ": " << r.reason << "\n";
      }
      return r.accepted ? kOk : kValidation;
    }
    if (*bench_cmd) {
      Loaded l = load(bench_opts);
      MaskCache cache;
      BenchReport r = bench(l.source(), *l.vocab, bench_cfg, reps, threads, cache);
      std::cout << (bench_json ? r.to_json() + "\n" : r.to_table());
      return kOk;
    }
  } catch (const MaskSoundnessError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const CompileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCompile;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
