#include "corpex/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "corpex/errors.hpp"
#include "corpex/rng.hpp"
#include "corpex/version.hpp"

namespace corpex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------
// schema helpers: every complaint carries the config.<field.path> name

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  std::string where = path.empty() ? "config" : "config." + path;
  throw ConfigError(where + ": " + what);
}

std::string sub(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "must be an object");
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      fail(path, "unknown field '" + key + "'");
  }
}

const json* member(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::string req_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "must be a string");
  return j.get<std::string>();
}

bool req_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "must be a boolean");
  return j.get<bool>();
}

double req_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "must be a number");
  return j.get<double>();
}

uint64_t req_uint(const json& j, const std::string& path) {
  if (j.is_number_integer() && j.get<int64_t>() < 0)
    fail(path, "must be a non-negative integer");
  if (!j.is_number_unsigned() && !j.is_number_integer())
    fail(path, "must be a non-negative integer");
  return j.get<uint64_t>();
}

fs::path req_existing_path(const json& j, const std::string& path) {
  fs::path p = req_string(j, path);
  if (!fs::exists(p)) fail(path, "path does not exist: " + p.string());
  return p;
}

std::vector<std::string> req_string_array(const json& j,
                                          const std::string& path) {
  if (!j.is_array()) fail(path, "must be an array of strings");
  std::vector<std::string> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(req_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

// ---------------------------------------------------------------------
// section parsers

std::vector<CorpusDecl> parse_corpora(const json* j) {
  std::vector<CorpusDecl> out;
  if (!j) return out;
  if (!j->is_array()) fail("corpora", "must be an array");
  std::set<std::string> names;
  for (size_t i = 0; i < j->size(); ++i) {
    std::string path = "corpora[" + std::to_string(i) + "]";
    const json& c = (*j)[i];
    expect_object(c, path);
    check_keys(c, path, {"name", "source", "path", "format", "legality"});
    CorpusDecl decl;
    const json* name = member(c, "name");
    if (!name) fail(sub(path, "name"), "is required");
    decl.name = req_string(*name, sub(path, "name"));
    if (decl.name.empty()) fail(sub(path, "name"), "must not be empty");
    if (!names.insert(decl.name).second)
      fail(sub(path, "name"), "duplicate corpus name '" + decl.name + "'");

    std::string source = "file";
    if (const json* s = member(c, "source"))
      source = req_string(*s, sub(path, "source"));
    if (source == "synth") {
      decl.source = CorpusDecl::Source::Synth;
      if (member(c, "path"))
        fail(sub(path, "path"), "not allowed for synth corpora");
      if (member(c, "format"))
        fail(sub(path, "format"), "not allowed for synth corpora");
      if (member(c, "legality"))
        fail(sub(path, "legality"),
             "synth corpora take legality from the synth domain");
    } else if (source == "file") {
      decl.source = CorpusDecl::Source::File;
      const json* p = member(c, "path");
      if (!p) fail(sub(path, "path"), "is required for file corpora");
      decl.path = req_existing_path(*p, sub(path, "path"));
      if (const json* f = member(c, "format")) {
        std::string fmt = req_string(*f, sub(path, "format"));
        if (fmt == "jsonl")
          decl.format = CorpusFormat::JsonLines;
        else if (fmt == "textdir")
          decl.format = CorpusFormat::TextDir;
        else
          fail(sub(path, "format"), "must be 'jsonl' or 'textdir'");
      }
      if (const json* l = member(c, "legality")) {
        std::string leg = req_string(*l, sub(path, "legality"));
        try {
          decl.legality = legality_from_string(leg);
        } catch (const ConfigError& e) {
          fail(sub(path, "legality"), e.what());
        }
      }
    } else {
      fail(sub(path, "source"), "must be 'file' or 'synth'");
    }
    out.push_back(std::move(decl));
  }
  return out;
}

TaggerConfig parse_tagger(const json* j) {
  TaggerConfig out;
  if (!j) return out;
  expect_object(*j, "tagger");
  check_keys(*j, "tagger", {"provider", "lexicon", "conllu_files"});
  if (const json* p = member(*j, "provider"))
    out.provider = req_string(*p, "tagger.provider");
  if (out.provider != "baseline" && out.provider != "conllu")
    fail("tagger.provider", "must be 'baseline' or 'conllu'");
  if (const json* lex = member(*j, "lexicon")) {
    if (out.provider != "baseline")
      fail("tagger.lexicon", "only valid with provider 'baseline'");
    out.lexicon = req_existing_path(*lex, "tagger.lexicon");
  }
  if (const json* files = member(*j, "conllu_files")) {
    if (out.provider != "conllu")
      fail("tagger.conllu_files", "only valid with provider 'conllu'");
    std::vector<std::string> raw =
        req_string_array(*files, "tagger.conllu_files");
    for (size_t i = 0; i < raw.size(); ++i) {
      fs::path p = raw[i];
      if (!fs::exists(p))
        fail("tagger.conllu_files[" + std::to_string(i) + "]",
             "path does not exist: " + p.string());
      out.conllu_files.push_back(p);
    }
  }
  if (out.provider == "conllu" && out.conllu_files.empty())
    fail("tagger.conllu_files", "is required for provider 'conllu'");
  return out;
}

EmbeddingsConfig parse_embeddings(const json* j) {
  EmbeddingsConfig out;
  if (!j) return out;
  expect_object(*j, "embeddings");
  check_keys(*j, "embeddings", {"path", "synthetic_dim"});
  if (const json* p = member(*j, "path"))
    out.path = req_existing_path(*p, "embeddings.path");
  if (const json* d = member(*j, "synthetic_dim")) {
    uint64_t dim = req_uint(*d, "embeddings.synthetic_dim");
    if (dim == 0) fail("embeddings.synthetic_dim", "must be positive");
    out.synthetic_dim = static_cast<size_t>(dim);
  }
  if (out.path && out.synthetic_dim)
    fail("embeddings", "give either path or synthetic_dim, not both");
  return out;
}

SyntheticSpec parse_synth(const json& j) {
  expect_object(j, "synth");
  check_keys(j, "synth",
             {"domains", "lexicon_size_per_tag", "shared_fraction",
              "length_min", "length_max", "marker_rate", "marker_words",
              "coverage_prefix"});
  SyntheticSpec spec;
  const json* domains = member(j, "domains");
  if (!domains || !domains->is_array() || domains->empty())
    fail("synth.domains", "must be a non-empty array");
  for (size_t i = 0; i < domains->size(); ++i) {
    std::string path = "synth.domains[" + std::to_string(i) + "]";
    const json& d = (*domains)[i];
    expect_object(d, path);
    check_keys(d, path,
               {"name", "legality", "topic", "pos_profile", "paragraphs",
                "sites"});
    SyntheticDomain domain;
    const json* name = member(d, "name");
    if (!name) fail(sub(path, "name"), "is required");
    domain.name = req_string(*name, sub(path, "name"));
    if (const json* l = member(d, "legality")) {
      try {
        domain.legality = legality_from_string(req_string(*l, sub(path, "legality")));
      } catch (const ConfigError& e) {
        fail(sub(path, "legality"), e.what());
      }
    }
    const json* topic = member(d, "topic");
    if (!topic) fail(sub(path, "topic"), "is required");
    domain.topic = req_string(*topic, sub(path, "topic"));
    const json* profile = member(d, "pos_profile");
    if (!profile || !profile->is_object() || profile->empty())
      fail(sub(path, "pos_profile"), "must be a non-empty object");
    for (const auto& [tag, weight] : profile->items()) {
      std::optional<Upos> upos = upos_from_string(tag);
      if (!upos)
        fail(sub(path, "pos_profile"), "unknown POS tag '" + tag + "'");
      domain.pos_profile[*upos] =
          req_number(weight, sub(path, "pos_profile." + tag));
    }
    if (const json* p = member(d, "paragraphs"))
      domain.paragraphs = req_uint(*p, sub(path, "paragraphs"));
    if (const json* s = member(d, "sites"))
      domain.sites = req_uint(*s, sub(path, "sites"));
    spec.domains.push_back(std::move(domain));
  }
  if (const json* v = member(j, "lexicon_size_per_tag"))
    spec.lexicon_size_per_tag = req_uint(*v, "synth.lexicon_size_per_tag");
  if (const json* v = member(j, "shared_fraction"))
    spec.shared_fraction = req_number(*v, "synth.shared_fraction");
  if (const json* v = member(j, "length_min"))
    spec.length_min = req_uint(*v, "synth.length_min");
  if (const json* v = member(j, "length_max"))
    spec.length_max = req_uint(*v, "synth.length_max");
  if (const json* v = member(j, "marker_rate"))
    spec.marker_rate = req_number(*v, "synth.marker_rate");
  if (const json* v = member(j, "marker_words"))
    spec.marker_words = req_uint(*v, "synth.marker_words");
  if (const json* v = member(j, "coverage_prefix"))
    spec.coverage_prefix = req_bool(*v, "synth.coverage_prefix");
  return spec;
}

CleanConfigSection parse_clean(const json* j) {
  CleanConfigSection out;
  if (!j) return out;
  expect_object(*j, "clean");
  check_keys(*j, "clean", {"strip_urls", "strip_key_blobs", "key_min_length"});
  if (const json* v = member(*j, "strip_urls"))
    out.options.strip_urls = req_bool(*v, "clean.strip_urls");
  if (const json* v = member(*j, "strip_key_blobs"))
    out.options.strip_key_blobs = req_bool(*v, "clean.strip_key_blobs");
  if (const json* v = member(*j, "key_min_length")) {
    out.options.key_min_length = req_uint(*v, "clean.key_min_length");
    if (out.options.key_min_length == 0)
      fail("clean.key_min_length", "must be positive");
  }
  return out;
}

SplitConfig parse_split(const json* j) {
  SplitConfig out;
  if (!j) return out;
  expect_object(*j, "split");
  check_keys(*j, "split", {"counts", "ratios", "site_disjoint"});
  const json* counts = member(*j, "counts");
  const json* ratios = member(*j, "ratios");
  if (counts && ratios)
    fail("split", "give either counts or ratios, not both");
  if (counts) {
    expect_object(*counts, "split.counts");
    check_keys(*counts, "split.counts", {"train", "valid", "test"});
    SplitCounts sc;
    if (const json* v = member(*counts, "train"))
      sc.train = req_uint(*v, "split.counts.train");
    if (const json* v = member(*counts, "valid"))
      sc.valid = req_uint(*v, "split.counts.valid");
    if (const json* v = member(*counts, "test"))
      sc.test = req_uint(*v, "split.counts.test");
    if (sc.train == 0) fail("split.counts.train", "must be positive");
    out.counts = sc;
  }
  if (ratios) {
    expect_object(*ratios, "split.ratios");
    check_keys(*ratios, "split.ratios", {"train", "valid", "test"});
    if (const json* v = member(*ratios, "train"))
      out.ratios.train = req_number(*v, "split.ratios.train");
    if (const json* v = member(*ratios, "valid"))
      out.ratios.valid = req_number(*v, "split.ratios.valid");
    if (const json* v = member(*ratios, "test"))
      out.ratios.test = req_number(*v, "split.ratios.test");
  }
  if (const json* v = member(*j, "site_disjoint"))
    out.site_disjoint = req_bool(*v, "split.site_disjoint");
  return out;
}

DivergenceConfig parse_divergence(const json* j) {
  DivergenceConfig out;
  if (!j) return out;
  expect_object(*j, "divergence");
  check_keys(*j, "divergence", {"metric", "trials", "raw_l1", "corpora"});
  if (const json* m = member(*j, "metric")) {
    std::string metric = req_string(*m, "divergence.metric");
    if (metric == "jsd")
      out.metric = DivergenceMetric::Jsd;
    else if (metric == "variational")
      out.metric = DivergenceMetric::Variational;
    else
      fail("divergence.metric", "must be 'jsd' or 'variational'");
  }
  if (const json* t = member(*j, "trials")) {
    uint64_t trials = req_uint(*t, "divergence.trials");
    if (trials == 0) fail("divergence.trials", "must be positive");
    out.trials = static_cast<int>(trials);
  }
  if (const json* r = member(*j, "raw_l1"))
    out.raw_l1 = req_bool(*r, "divergence.raw_l1");
  if (const json* c = member(*j, "corpora"))
    out.corpora = req_string_array(*c, "divergence.corpora");
  return out;
}

ExperimentsConfig parse_experiments(const json* j) {
  ExperimentsConfig out;
  out.classifiers = {ClassifierKind::NaiveBayes};
  out.manipulations.assign(std::begin(kAllManipulations),
                           std::end(kAllManipulations));
  if (!j) return out;
  expect_object(*j, "experiments");
  check_keys(*j, "experiments",
             {"classifiers", "manipulations", "train", "test", "nb", "svm",
              "boe"});
  if (const json* c = member(*j, "classifiers")) {
    std::vector<std::string> raw = req_string_array(*c, "experiments.classifiers");
    if (raw.empty()) fail("experiments.classifiers", "must not be empty");
    out.classifiers.clear();
    for (size_t i = 0; i < raw.size(); ++i) {
      try {
        out.classifiers.push_back(classifier_from_string(raw[i]));
      } catch (const ConfigError& e) {
        fail("experiments.classifiers[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  if (const json* m = member(*j, "manipulations")) {
    std::vector<std::string> raw =
        req_string_array(*m, "experiments.manipulations");
    if (raw.empty()) fail("experiments.manipulations", "must not be empty");
    out.manipulations.clear();
    for (size_t i = 0; i < raw.size(); ++i) {
      std::optional<Manipulation> manip = manipulation_from_string(raw[i]);
      if (!manip)
        fail("experiments.manipulations[" + std::to_string(i) + "]",
             "unknown manipulation '" + raw[i] + "'");
      out.manipulations.push_back(*manip);
    }
  }
  if (const json* t = member(*j, "train"))
    out.train = req_string_array(*t, "experiments.train");
  if (const json* t = member(*j, "test"))
    out.test = req_string_array(*t, "experiments.test");
  if (const json* nb = member(*j, "nb")) {
    expect_object(*nb, "experiments.nb");
    check_keys(*nb, "experiments.nb", {"alpha"});
    if (const json* a = member(*nb, "alpha")) {
      out.nb_alpha = req_number(*a, "experiments.nb.alpha");
      if (out.nb_alpha <= 0.0) fail("experiments.nb.alpha", "must be positive");
    }
  }
  if (const json* svm = member(*j, "svm")) {
    expect_object(*svm, "experiments.svm");
    check_keys(*svm, "experiments.svm", {"c", "gamma", "tol", "max_iter"});
    if (const json* v = member(*svm, "c")) {
      out.svm.c = req_number(*v, "experiments.svm.c");
      if (out.svm.c <= 0.0) fail("experiments.svm.c", "must be positive");
    }
    if (const json* v = member(*svm, "gamma")) {
      if (v->is_string()) {
        if (v->get<std::string>() != "scale")
          fail("experiments.svm.gamma", "must be 'scale' or a positive number");
        out.svm.gamma = SvmGamma::scale();
      } else {
        double g = req_number(*v, "experiments.svm.gamma");
        if (g <= 0.0)
          fail("experiments.svm.gamma", "must be 'scale' or a positive number");
        out.svm.gamma = SvmGamma::fixed(g);
      }
    }
    if (const json* v = member(*svm, "tol")) {
      out.svm.tol = req_number(*v, "experiments.svm.tol");
      if (out.svm.tol <= 0.0) fail("experiments.svm.tol", "must be positive");
    }
    if (const json* v = member(*svm, "max_iter")) {
      out.svm.max_iter = req_uint(*v, "experiments.svm.max_iter");
      if (out.svm.max_iter == 0)
        fail("experiments.svm.max_iter", "must be positive");
    }
  }
  if (const json* boe = member(*j, "boe")) {
    expect_object(*boe, "experiments.boe");
    check_keys(*boe, "experiments.boe",
               {"hidden_dim", "learning_rate", "momentum", "epochs",
                "dropout"});
    if (const json* v = member(*boe, "hidden_dim")) {
      out.boe.hidden_dim = req_uint(*v, "experiments.boe.hidden_dim");
      if (out.boe.hidden_dim == 0)
        fail("experiments.boe.hidden_dim", "must be positive");
    }
    if (const json* v = member(*boe, "learning_rate")) {
      out.boe.learning_rate = req_number(*v, "experiments.boe.learning_rate");
      if (out.boe.learning_rate <= 0.0)
        fail("experiments.boe.learning_rate", "must be positive");
    }
    if (const json* v = member(*boe, "momentum")) {
      out.boe.momentum = req_number(*v, "experiments.boe.momentum");
      if (out.boe.momentum < 0.0 || out.boe.momentum >= 1.0)
        fail("experiments.boe.momentum", "must be in [0, 1)");
    }
    if (const json* v = member(*boe, "epochs"))
      out.boe.epochs = req_uint(*v, "experiments.boe.epochs");
    if (const json* v = member(*boe, "dropout")) {
      out.boe.dropout = req_number(*v, "experiments.boe.dropout");
      if (out.boe.dropout < 0.0 || out.boe.dropout >= 1.0)
        fail("experiments.boe.dropout", "must be in [0, 1)");
    }
  }
  return out;
}

WikifyConfig parse_wikify(const json* j) {
  WikifyConfig out;
  if (!j) return out;
  expect_object(*j, "wikify");
  check_keys(*j, "wikify", {"ner", "mentions_path", "kb", "counting", "corpora"});
  if (const json* n = member(*j, "ner")) out.ner = req_string(*n, "wikify.ner");
  if (out.ner != "baseline" && out.ner != "import")
    fail("wikify.ner", "must be 'baseline' or 'import'");
  if (const json* m = member(*j, "mentions_path"))
    out.mentions_path = req_existing_path(*m, "wikify.mentions_path");
  if (out.ner == "import" && !out.mentions_path)
    fail("wikify.mentions_path", "is required when ner is 'import'");
  if (const json* kb = member(*j, "kb")) {
    expect_object(*kb, "wikify.kb");
    check_keys(*kb, "wikify.kb",
               {"mode", "snapshot", "url", "endpoint", "confidence",
                "max_retries", "backoff_ms", "timeout_s", "min_interval_ms"});
    if (const json* m = member(*kb, "mode"))
      out.kb.mode = req_string(*m, "wikify.kb.mode");
    if (out.kb.mode != "offline" && out.kb.mode != "http")
      fail("wikify.kb.mode", "must be 'offline' or 'http'");
    if (const json* s = member(*kb, "snapshot"))
      out.kb.snapshot = req_existing_path(*s, "wikify.kb.snapshot");
    if (const json* u = member(*kb, "url"))
      out.kb.http.base_url = req_string(*u, "wikify.kb.url");
    if (const json* e = member(*kb, "endpoint"))
      out.kb.http.path = req_string(*e, "wikify.kb.endpoint");
    if (const json* c = member(*kb, "confidence")) {
      out.kb.http.confidence = req_number(*c, "wikify.kb.confidence");
      if (out.kb.http.confidence < 0.0 || out.kb.http.confidence > 1.0)
        fail("wikify.kb.confidence", "must be in [0, 1]");
    }
    if (const json* r = member(*kb, "max_retries"))
      out.kb.http.max_retries =
          static_cast<int>(req_uint(*r, "wikify.kb.max_retries"));
    if (const json* b = member(*kb, "backoff_ms")) {
      out.kb.http.backoff_initial_ms =
          static_cast<int>(req_uint(*b, "wikify.kb.backoff_ms"));
      if (out.kb.http.backoff_initial_ms == 0)
        fail("wikify.kb.backoff_ms", "must be positive");
    }
    if (const json* t = member(*kb, "timeout_s")) {
      out.kb.http.timeout_seconds =
          static_cast<int>(req_uint(*t, "wikify.kb.timeout_s"));
      if (out.kb.http.timeout_seconds == 0)
        fail("wikify.kb.timeout_s", "must be positive");
    }
    if (const json* i = member(*kb, "min_interval_ms"))
      out.kb.http.min_request_interval_ms =
          static_cast<int>(req_uint(*i, "wikify.kb.min_interval_ms"));
  }
  if (out.kb.mode == "http" && out.kb.http.base_url.empty())
    fail("wikify.kb.url", "is required in http mode");
  if (const json* c = member(*j, "counting")) {
    try {
      out.counting = coverage_counting_from_string(req_string(*c, "wikify.counting"));
    } catch (const ConfigError& e) {
      fail("wikify.counting", e.what());
    }
  }
  if (const json* c = member(*j, "corpora"))
    out.corpora = req_string_array(*c, "wikify.corpora");
  return out;
}

ReportConfig parse_report(const json* j) {
  ReportConfig out;
  if (!j) return out;
  expect_object(*j, "report");
  check_keys(*j, "report", {"inputs"});
  if (const json* i = member(*j, "inputs")) {
    std::vector<std::string> raw = req_string_array(*i, "report.inputs");
    for (size_t k = 0; k < raw.size(); ++k) {
      fs::path p = raw[k];
      if (!fs::exists(p))
        fail("report.inputs[" + std::to_string(k) + "]",
             "path does not exist: " + p.string());
      out.inputs.push_back(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// cross-reference checks and the canonical echo

const CorpusDecl* find_decl(const RunConfig& config, const std::string& name) {
  for (const CorpusDecl& decl : config.corpora)
    if (decl.name == name) return &decl;
  return nullptr;
}

const SyntheticDomain* find_synth_domain(const RunConfig& config,
                                         const std::string& name) {
  if (!config.synth) return nullptr;
  for (const SyntheticDomain& d : config.synth->domains)
    if (d.name == name) return &d;
  return nullptr;
}

void check_corpus_refs(const RunConfig& config,
                       const std::vector<std::string>& names,
                       const std::string& path) {
  for (size_t i = 0; i < names.size(); ++i)
    if (!find_decl(config, names[i]))
      fail(path + "[" + std::to_string(i) + "]",
           "corpus '" + names[i] + "' is not declared");
}

Legality corpus_label(const RunConfig& config, const CorpusDecl& decl) {
  if (decl.source == CorpusDecl::Source::File) return decl.legality;
  const SyntheticDomain* d = find_synth_domain(config, decl.name);
  return d ? d->legality : Legality::Unspecified;
}

void cross_check(RunConfig& config) {
  for (size_t i = 0; i < config.corpora.size(); ++i) {
    const CorpusDecl& decl = config.corpora[i];
    if (decl.source == CorpusDecl::Source::Synth &&
        !find_synth_domain(config, decl.name))
      fail("corpora[" + std::to_string(i) + "].name",
           "synth corpus '" + decl.name + "' has no matching synth domain");
  }

  std::vector<std::string> all_names;
  for (const CorpusDecl& decl : config.corpora) all_names.push_back(decl.name);
  if (config.divergence.corpora.empty())
    config.divergence.corpora = all_names;
  else
    check_corpus_refs(config, config.divergence.corpora, "divergence.corpora");
  if (config.wikify.corpora.empty())
    config.wikify.corpora = all_names;
  else
    check_corpus_refs(config, config.wikify.corpora, "wikify.corpora");

  check_corpus_refs(config, config.experiments.train, "experiments.train");
  check_corpus_refs(config, config.experiments.test, "experiments.test");
  if (!config.experiments.train.empty()) {
    for (const std::string& name : config.experiments.train)
      if (corpus_label(config, *find_decl(config, name)) ==
          Legality::Unspecified)
        fail("experiments.train",
             "corpus '" + name + "' needs a legality label to act as a class");
    for (const std::string& name : config.experiments.test)
      if (corpus_label(config, *find_decl(config, name)) ==
          Legality::Unspecified)
        fail("experiments.test",
             "corpus '" + name + "' needs a legality label to act as a class");
  }

  bool wants_boe =
      std::any_of(config.experiments.classifiers.begin(),
                  config.experiments.classifiers.end(), [](ClassifierKind k) {
                    return k == ClassifierKind::BoeSum ||
                           k == ClassifierKind::BoeAvg;
                  });
  if (wants_boe && !config.embeddings.path && !config.embeddings.synthetic_dim)
    fail("experiments.classifiers",
         "bag-of-embeddings classifiers need an embeddings section");
  if (config.embeddings.synthetic_dim && !config.experiments.train.empty()) {
    std::vector<std::string> used = config.experiments.train;
    used.insert(used.end(), config.experiments.test.begin(),
                config.experiments.test.end());
    for (const std::string& name : used)
      if (find_decl(config, name)->source != CorpusDecl::Source::Synth)
        fail("embeddings.synthetic_dim",
             "requires synth-sourced corpora, but '" + name + "' is a file");
  }

  if (config.offline && config.wikify.kb.mode == "http") {
    if (!config.wikify.kb.snapshot)
      fail("wikify.kb.snapshot", "offline mode needs a snapshot to fall back on");
    config.wikify.kb.mode = "offline";
  }
}

json echo_synth(const SyntheticSpec& spec) {
  json domains = json::array();
  for (const SyntheticDomain& d : spec.domains) {
    json profile;
    for (const auto& [tag, weight] : d.pos_profile)
      profile[std::string(to_string(tag))] = weight;
    domains.push_back({{"name", d.name},
                       {"legality", std::string(to_string(d.legality))},
                       {"topic", d.topic},
                       {"pos_profile", std::move(profile)},
                       {"paragraphs", d.paragraphs},
                       {"sites", d.sites}});
  }
  return {{"domains", std::move(domains)},
          {"lexicon_size_per_tag", spec.lexicon_size_per_tag},
          {"shared_fraction", spec.shared_fraction},
          {"length_min", spec.length_min},
          {"length_max", spec.length_max},
          {"marker_rate", spec.marker_rate},
          {"marker_words", spec.marker_words},
          {"coverage_prefix", spec.coverage_prefix}};
}

json echo_config(const RunConfig& c) {
  json j;
  j["version"] = kVersion;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["offline"] = c.offline;
  j["out_dir"] = c.out_dir.string();

  json corpora = json::array();
  for (const CorpusDecl& decl : c.corpora) {
    json entry{{"name", decl.name}};
    if (decl.source == CorpusDecl::Source::Synth) {
      entry["source"] = "synth";
    } else {
      entry["source"] = "file";
      entry["path"] = decl.path.string();
      entry["format"] =
          decl.format == CorpusFormat::JsonLines ? "jsonl" : "textdir";
      entry["legality"] = std::string(to_string(decl.legality));
    }
    corpora.push_back(std::move(entry));
  }
  j["corpora"] = std::move(corpora);

  json tagger{{"provider", c.tagger.provider}};
  if (c.tagger.lexicon) tagger["lexicon"] = c.tagger.lexicon->string();
  if (!c.tagger.conllu_files.empty()) {
    json files = json::array();
    for (const fs::path& p : c.tagger.conllu_files) files.push_back(p.string());
    tagger["conllu_files"] = std::move(files);
  }
  j["tagger"] = std::move(tagger);

  if (c.embeddings.path || c.embeddings.synthetic_dim) {
    json embeddings;
    if (c.embeddings.path) embeddings["path"] = c.embeddings.path->string();
    if (c.embeddings.synthetic_dim)
      embeddings["synthetic_dim"] = *c.embeddings.synthetic_dim;
    j["embeddings"] = std::move(embeddings);
  }

  if (c.synth) j["synth"] = echo_synth(*c.synth);

  j["clean"] = {{"strip_urls", c.clean.options.strip_urls},
                {"strip_key_blobs", c.clean.options.strip_key_blobs},
                {"key_min_length", c.clean.options.key_min_length}};

  json split{{"site_disjoint", c.split.site_disjoint}};
  if (c.split.counts) {
    split["counts"] = {{"train", c.split.counts->train},
                       {"valid", c.split.counts->valid},
                       {"test", c.split.counts->test}};
  } else {
    split["ratios"] = {{"train", c.split.ratios.train},
                       {"valid", c.split.ratios.valid},
                       {"test", c.split.ratios.test}};
  }
  j["split"] = std::move(split);

  j["divergence"] = {{"metric", std::string(to_string(c.divergence.metric))},
                     {"trials", c.divergence.trials},
                     {"raw_l1", c.divergence.raw_l1},
                     {"corpora", c.divergence.corpora}};

  json classifiers = json::array();
  for (ClassifierKind k : c.experiments.classifiers)
    classifiers.push_back(std::string(to_string(k)));
  json manipulations = json::array();
  for (Manipulation m : c.experiments.manipulations)
    manipulations.push_back(std::string(to_string(m)));
  json gamma = c.experiments.svm.gamma.kind == SvmGamma::Kind::Scale
                   ? json("scale")
                   : json(c.experiments.svm.gamma.value);
  j["experiments"] = {
      {"classifiers", std::move(classifiers)},
      {"manipulations", std::move(manipulations)},
      {"train", c.experiments.train},
      {"test", c.experiments.test},
      {"nb", {{"alpha", c.experiments.nb_alpha}}},
      {"svm",
       {{"c", c.experiments.svm.c},
        {"gamma", std::move(gamma)},
        {"tol", c.experiments.svm.tol},
        {"max_iter", c.experiments.svm.max_iter}}},
      {"boe",
       {{"hidden_dim", c.experiments.boe.hidden_dim},
        {"learning_rate", c.experiments.boe.learning_rate},
        {"momentum", c.experiments.boe.momentum},
        {"epochs", c.experiments.boe.epochs},
        {"dropout", c.experiments.boe.dropout}}}};

  json kb{{"mode", c.wikify.kb.mode}};
  if (c.wikify.kb.snapshot) kb["snapshot"] = c.wikify.kb.snapshot->string();
  if (!c.wikify.kb.http.base_url.empty()) {
    kb["url"] = c.wikify.kb.http.base_url;
    kb["endpoint"] = c.wikify.kb.http.path;
    kb["confidence"] = c.wikify.kb.http.confidence;
    kb["max_retries"] = c.wikify.kb.http.max_retries;
    kb["backoff_ms"] = c.wikify.kb.http.backoff_initial_ms;
    kb["timeout_s"] = c.wikify.kb.http.timeout_seconds;
    kb["min_interval_ms"] = c.wikify.kb.http.min_request_interval_ms;
  }
  json wikify{{"ner", c.wikify.ner},
              {"kb", std::move(kb)},
              {"counting", std::string(to_string(c.wikify.counting))},
              {"corpora", c.wikify.corpora}};
  if (c.wikify.mentions_path)
    wikify["mentions_path"] = c.wikify.mentions_path->string();
  j["wikify"] = std::move(wikify);

  if (!c.report.inputs.empty()) {
    json inputs = json::array();
    for (const fs::path& p : c.report.inputs) inputs.push_back(p.string());
    j["report"] = {{"inputs", std::move(inputs)}};
  }
  return j;
}

}  // namespace

RunConfig validate_config_json(const json& raw) {
  expect_object(raw, "");
  check_keys(raw, "",
             {"version", "seed", "workers", "offline", "out_dir", "corpora",
              "tagger", "embeddings", "synth", "clean", "split", "divergence",
              "experiments", "wikify", "report"});
  RunConfig config;
  if (const json* v = member(raw, "version"))
    req_string(*v, "version");  // informational; rewritten on echo
  if (const json* v = member(raw, "seed")) config.seed = req_uint(*v, "seed");
  if (const json* v = member(raw, "workers")) {
    config.workers = req_uint(*v, "workers");
    if (config.workers == 0) fail("workers", "must be positive");
  }
  if (const json* v = member(raw, "offline"))
    config.offline = req_bool(*v, "offline");
  if (const json* v = member(raw, "out_dir")) {
    config.out_dir = req_string(*v, "out_dir");
    if (config.out_dir.empty()) fail("out_dir", "must not be empty");
  }
  config.corpora = parse_corpora(member(raw, "corpora"));
  config.tagger = parse_tagger(member(raw, "tagger"));
  config.embeddings = parse_embeddings(member(raw, "embeddings"));
  if (const json* s = member(raw, "synth")) config.synth = parse_synth(*s);
  config.clean = parse_clean(member(raw, "clean"));
  config.split = parse_split(member(raw, "split"));
  config.divergence = parse_divergence(member(raw, "divergence"));
  config.experiments = parse_experiments(member(raw, "experiments"));
  config.wikify = parse_wikify(member(raw, "wikify"));
  config.report = parse_report(member(raw, "report"));
  cross_check(config);
  config.resolved = echo_config(config);
  return config;
}

RunConfig validate_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json raw = json::parse(in, nullptr, false);
  if (raw.is_discarded())
    throw ConfigError("config file is not valid JSON: " + path.string());
  return validate_config_json(raw);
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.workers) {
    if (*overrides.workers == 0) throw ConfigError("--workers: must be positive");
    config.workers = *overrides.workers;
  }
  if (overrides.out_dir) config.out_dir = *overrides.out_dir;
  if (overrides.offline) config.offline = true;
  if (config.offline && config.wikify.kb.mode == "http") {
    if (!config.wikify.kb.snapshot)
      throw ConfigError(
          "config.wikify.kb.snapshot: offline mode needs a snapshot to fall "
          "back on");
    config.wikify.kb.mode = "offline";
  }
  config.resolved = echo_config(config);
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Clean: return "clean";
    case Command::Divergence: return "divergence";
    case Command::Classify: return "classify";
    case Command::Transfer: return "transfer";
    case Command::Wikify: return "wikify";
    case Command::Synth: return "synth";
    case Command::Report: return "report";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------
// bundle assembly: build under <name>.partial, rename into place on success

class Bundle {
 public:
  Bundle(const fs::path& out_dir, std::string_view command, uint64_t seed) {
    std::string stem = std::string(command) + "-seed" + std::to_string(seed);
    final_ = out_dir / stem;
    work_ = out_dir / (stem + ".partial");
    std::error_code ec;
    fs::remove_all(work_, ec);
    fs::create_directories(work_);
  }
  ~Bundle() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(work_, ec);
    }
  }

  // Returns the target path with parents ready, for writers that open the
  // file themselves.
  fs::path file(const std::string& name) const {
    fs::path target = work_ / name;
    fs::create_directories(target.parent_path());
    return target;
  }

  void write_text(const std::string& name, std::string_view content) {
    fs::path target = work_ / name;
    fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    if (!out) throw DataError("cannot write artifact: " + target.string());
    out << content;
    if (!out) throw DataError("short write on artifact: " + target.string());
  }

  void write_json(const std::string& name, const json& j) {
    write_text(name, j.dump(2) + "\n");
  }

  fs::path commit() {
    fs::remove_all(final_);
    fs::rename(work_, final_);
    committed_ = true;
    return final_;
  }

 private:
  fs::path final_, work_;
  bool committed_ = false;
};

struct LoadedCorpora {
  std::map<std::string, Corpus> corpora;               // cleaned text
  std::map<std::string, const SyntheticDomainData*> synth_data;
  SyntheticResult synth;  // owns what synth_data points into
};

bool any_synth(const RunConfig& config, const std::vector<std::string>& names) {
  for (const std::string& name : names)
    if (find_decl(config, name)->source == CorpusDecl::Source::Synth)
      return true;
  return false;
}

// Loads (file) or generates (synth) every named corpus, cleaned and ready.
LoadedCorpora load_corpora(const RunConfig& config,
                           const std::vector<std::string>& names) {
  LoadedCorpora out;
  if (any_synth(config, names)) {
    out.synth = generate_synthetic_corpus(*config.synth, config.seed);
    for (const SyntheticDomainData& data : out.synth.domains)
      out.synth_data[data.corpus.domain.name] = &data;
  }
  for (const std::string& name : names) {
    const CorpusDecl& decl = *find_decl(config, name);
    if (decl.source == CorpusDecl::Source::Synth) {
      out.corpora[name] = out.synth_data.at(name)->corpus;
    } else {
      out.corpora[name] =
          load_clean_corpus(decl.path, decl.format, {decl.name, decl.legality},
                            config.clean.options);
    }
  }
  return out;
}

std::unique_ptr<TaggerProvider> make_tagger(const RunConfig& config) {
  if (config.tagger.provider == "conllu")
    return std::make_unique<ConlluTagger>(config.tagger.conllu_files);
  if (config.tagger.lexicon)
    return std::make_unique<BaselineTagger>(
        BaselineTagger::from_file(*config.tagger.lexicon));
  return std::make_unique<BaselineTagger>();
}

// Classification view of a corpus group: synth corpora bring gold tags,
// file corpora are tagged by the configured provider.
std::vector<LabeledParagraph> labeled_group(
    const RunConfig& config, const LoadedCorpora& loaded,
    const std::vector<std::string>& names, const TaggerProvider* tagger) {
  std::vector<LabeledParagraph> out;
  for (const std::string& name : names) {
    const CorpusDecl& decl = *find_decl(config, name);
    if (decl.source == CorpusDecl::Source::Synth) {
      std::vector<LabeledParagraph> part =
          labeled_examples(*loaded.synth_data.at(name));
      out.insert(out.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    } else {
      const Corpus& corpus = loaded.corpora.at(name);
      std::string label(to_string(decl.legality));
      for (const Paragraph& p : corpus.paragraphs)
        out.push_back({tag_paragraph(p, *tagger), label, p.site_id});
    }
  }
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) {
    if (!out.empty()) out += "+";
    out += n;
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

Split make_split(const RunConfig& config,
                 std::span<const LabeledParagraph> data, uint64_t seed) {
  if (config.split.counts)
    return balanced_split(data, *config.split.counts, seed,
                          config.split.site_disjoint);
  return balanced_split(data, config.split.ratios, seed,
                        config.split.site_disjoint);
}

std::optional<EmbeddingTable> make_embeddings(const RunConfig& config,
                                              const LoadedCorpora& loaded) {
  bool wants_boe =
      std::any_of(config.experiments.classifiers.begin(),
                  config.experiments.classifiers.end(), [](ClassifierKind k) {
                    return k == ClassifierKind::BoeSum ||
                           k == ClassifierKind::BoeAvg;
                  });
  if (!wants_boe) return std::nullopt;
  uint64_t emb_seed = config.seed ^ fnv1a64("embeddings");
  if (config.embeddings.path)
    return EmbeddingTable::load(*config.embeddings.path, emb_seed);
  return EmbeddingTable::from_vectors(
      synthetic_embeddings(loaded.synth, *config.embeddings.synthetic_dim,
                           emb_seed),
      emb_seed);
}

void write_grid_artifacts(Bundle& bundle,
                          std::span<const ExperimentReport> reports,
                          double wall_seconds) {
  json grid = json::array();
  json cells;
  for (const ExperimentReport& r : reports) {
    grid.push_back(to_json(r));
    std::string key = std::string(to_string(r.config.classifier)) + "/" +
                      std::string(to_string(r.config.manipulation));
    cells[key] = r.wall_seconds;
    write_predictions_jsonl(
        r, bundle.file("predictions/" +
                       std::string(to_string(r.config.classifier)) + "-" +
                       std::string(to_string(r.config.manipulation)) +
                       ".jsonl"));
  }
  bundle.write_json("grid.json", grid);
  std::string table = grid_markdown(reports);
  bundle.write_text("table.md", table);
  bundle.write_json("timings.json",
                    {{"wall_seconds", wall_seconds}, {"cells", cells}});
}

void run_classify(const RunConfig& config, Bundle& bundle, bool transfer) {
  if (config.experiments.train.empty())
    throw ConfigError("config.experiments.train: required for this command");
  if (transfer && config.experiments.test.empty())
    throw ConfigError("config.experiments.test: required for transfer");

  std::vector<std::string> names = config.experiments.train;
  if (transfer)
    names.insert(names.end(), config.experiments.test.begin(),
                 config.experiments.test.end());
  LoadedCorpora loaded = load_corpora(config, names);

  std::unique_ptr<TaggerProvider> tagger;
  for (const std::string& name : names)
    if (find_decl(config, name)->source == CorpusDecl::Source::File) {
      tagger = make_tagger(config);
      break;
    }

  std::vector<LabeledParagraph> train_data =
      labeled_group(config, loaded, config.experiments.train, tagger.get());
  Split source = make_split(config, train_data, config.seed);
  std::optional<Split> target;
  if (transfer) {
    std::vector<LabeledParagraph> test_data =
        labeled_group(config, loaded, config.experiments.test, tagger.get());
    target = make_split(config, test_data, config.seed);
  }

  std::optional<EmbeddingTable> table = make_embeddings(config, loaded);

  GridSpec grid;
  grid.classifiers = config.experiments.classifiers;
  grid.manipulations = config.experiments.manipulations;
  grid.base.train_domain = join_names(config.experiments.train);
  grid.base.test_domain =
      transfer ? join_names(config.experiments.test) : grid.base.train_domain;
  grid.base.nb_alpha = config.experiments.nb_alpha;
  grid.base.svm = config.experiments.svm;
  grid.base.boe = config.experiments.boe;
  grid.seed = config.seed;
  grid.workers = config.workers;

  auto started = std::chrono::steady_clock::now();
  std::vector<ExperimentReport> reports =
      run_grid(grid, source, table ? &*table : nullptr,
               target ? &*target : nullptr);
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - started)
                    .count();
  write_grid_artifacts(bundle, reports, wall);
}

void run_clean(const RunConfig& config, Bundle& bundle) {
  json stats;
  size_t file_corpora = 0;
  for (const CorpusDecl& decl : config.corpora) {
    if (decl.source != CorpusDecl::Source::File) continue;
    ++file_corpora;
    CleanStats cs;
    Warnings warnings;
    Corpus corpus =
        load_clean_corpus(decl.path, decl.format, {decl.name, decl.legality},
                          config.clean.options, &cs, &warnings);
    write_jsonl(corpus, bundle.file(decl.name + ".cleaned.jsonl"));
    stats[decl.name] = {{"paragraphs_in", cs.paragraphs_in},
                        {"emptied", cs.emptied},
                        {"duplicates", cs.duplicates},
                        {"paragraphs_out", cs.paragraphs_out},
                        {"warnings", warnings}};
  }
  if (file_corpora == 0)
    throw ConfigError("config.corpora: clean needs at least one file corpus");
  bundle.write_json("stats.json", stats);
}

void run_divergence(const RunConfig& config, Bundle& bundle) {
  if (config.divergence.corpora.empty())
    throw ConfigError("config.corpora: divergence needs declared corpora");
  LoadedCorpora loaded = load_corpora(config, config.divergence.corpora);
  std::vector<Corpus> corpora;
  for (const std::string& name : config.divergence.corpora)
    corpora.push_back(loaded.corpora.at(name));

  DistanceMatrix matrix = distance_matrix(corpora, config.divergence.metric,
                                          config.seed, config.divergence.raw_l1);
  bundle.write_json("matrix.json", to_json(matrix));
  bundle.write_text("matrix.csv", to_csv(matrix));
  bundle.write_text("table.md", to_markdown(matrix));

  json self;
  for (const Corpus& corpus : corpora) {
    SelfDistanceResult r =
        self_distance(corpus, config.divergence.metric,
                      config.seed ^ fnv1a64("self:" + corpus.domain.name),
                      config.divergence.trials);
    self[corpus.domain.name] = {{"trials", r.trials}, {"mean", r.mean}};
  }
  bundle.write_json("self_distance.json", self);
}

void run_wikify(const RunConfig& config, Bundle& bundle) {
  if (config.wikify.corpora.empty())
    throw ConfigError("config.corpora: wikify needs declared corpora");
  LoadedCorpora loaded = load_corpora(config, config.wikify.corpora);

  std::map<std::string, std::string> inventory;
  for (const std::string& name : config.wikify.corpora)
    for (const Paragraph& p : loaded.corpora.at(name).paragraphs) {
      auto [it, fresh] = inventory.emplace(p.site_id, name);
      if (!fresh && it->second != name)
        throw DataError("site '" + p.site_id +
                        "' appears in two corpora: " + it->second + " and " +
                        name);
    }

  std::vector<EntityMention> mentions;
  if (config.wikify.ner == "import") {
    mentions = load_mentions_jsonl(*config.wikify.mentions_path);
  } else {
    BaselineNer ner;
    for (const std::string& name : config.wikify.corpora) {
      std::vector<EntityMention> found =
          extract_entities(loaded.corpora.at(name), ner);
      mentions.insert(mentions.end(), std::make_move_iterator(found.begin()),
                      std::make_move_iterator(found.end()));
    }
  }

  std::unique_ptr<KbClient> kb;
  if (config.wikify.kb.mode == "offline") {
    if (!config.wikify.kb.snapshot)
      throw ConfigError("config.wikify.kb.snapshot: is required in offline mode");
    kb = std::make_unique<OfflineKb>(
        OfflineKb::from_tsv(*config.wikify.kb.snapshot));
  } else {
    kb = std::make_unique<HttpKb>(config.wikify.kb.http);
  }

  LinkEngine engine(*kb);
  std::vector<LinkResult> links = engine.link_all(mentions, config.workers);
  CoverageReport coverage =
      coverage_report(links, inventory, config.wikify.counting);

  save_mentions_jsonl(mentions, bundle.file("mentions.jsonl"));
  save_links_jsonl(links, bundle.file("links.jsonl"));
  bundle.write_json("coverage.json", to_json(coverage));
  bundle.write_text("coverage.md", coverage_markdown(coverage));
}

void run_synth(const RunConfig& config, Bundle& bundle) {
  if (!config.synth)
    throw ConfigError("config.synth: required for the synth command");
  SyntheticResult result = generate_synthetic_corpus(*config.synth, config.seed);
  json summary;
  for (size_t i = 0; i < result.domains.size(); ++i) {
    const SyntheticDomainData& data = result.domains[i];
    const std::string& name = data.corpus.domain.name;
    write_jsonl(data.corpus, bundle.file(name + ".jsonl"));
    write_conllu(data.tagged, bundle.file(name + ".conllu"));
    summary[name] = {
        {"paragraphs", data.corpus.paragraphs.size()},
        {"legality", std::string(to_string(data.corpus.domain.legality))},
        {"topic", config.synth->domains[i].topic},
        {"sites", config.synth->domains[i].sites}};
  }
  if (config.embeddings.synthetic_dim) {
    std::vector<std::pair<std::string, std::vector<double>>> vectors =
        synthetic_embeddings(result, *config.embeddings.synthetic_dim,
                             config.seed ^ fnv1a64("embeddings"));
    std::string text = std::to_string(vectors.size()) + " " +
                       std::to_string(*config.embeddings.synthetic_dim) + "\n";
    for (const auto& [word, vec] : vectors) {
      text += word;
      for (double v : vec) text += " " + format_double(v);
      text += "\n";
    }
    bundle.write_text("embeddings.txt", text);
  }
  bundle.write_json("summary.json", summary);
}

DistanceMatrix matrix_from_json(const json& j, const std::string& where) {
  DistanceMatrix m;
  std::string metric = j.at("metric").get<std::string>();
  m.metric = metric == "variational" ? DivergenceMetric::Variational
                                     : DivergenceMetric::Jsd;
  for (const json& label : j.at("labels")) {
    MatrixLabel ml;
    ml.corpus = label.at("corpus").get<std::string>();
    std::string part = label.at("part").get<std::string>();
    if (part == "all")
      ml.part = CorpusPart::All;
    else if (part == "half1")
      ml.part = CorpusPart::Half1;
    else if (part == "half2")
      ml.part = CorpusPart::Half2;
    else
      throw DataError(where + ": unknown matrix part '" + part + "'");
    m.labels.push_back(std::move(ml));
  }
  for (const json& row : j.at("values")) {
    std::vector<double> values;
    for (const json& cell : row)
      values.push_back(cell.is_null() ? 0.0 : cell.get<double>());
    m.values.push_back(std::move(values));
  }
  return m;
}

CoverageReport coverage_from_json(const json& j) {
  CoverageReport report;
  report.counting =
      coverage_counting_from_string(j.at("counting").get<std::string>());
  for (const json& d : j.at("domains")) {
    DomainCoverage dc;
    dc.domain = d.at("domain").get<std::string>();
    dc.mean_percent = d.at("mean_percent").get<double>();
    dc.standard_error = d.at("standard_error").get<double>();
    dc.single_site = d.at("single_site").get<bool>();
    for (const json& s : d.at("sites")) {
      SiteCoverage sc;
      sc.site_id = s.at("site_id").get<std::string>();
      sc.total = s.at("total").get<size_t>();
      sc.linked = s.at("linked").get<size_t>();
      sc.percent = s.at("percent").get<double>();
      dc.sites.push_back(std::move(sc));
    }
    report.domains.push_back(std::move(dc));
  }
  return report;
}

std::vector<ExperimentReport> grid_from_json(const json& j,
                                             const std::string& where) {
  std::vector<ExperimentReport> reports;
  for (const json& r : j) {
    ExperimentReport report;
    const json& config = r.at("config");
    report.config.classifier =
        classifier_from_string(config.at("classifier").get<std::string>());
    std::optional<Manipulation> manip =
        manipulation_from_string(config.at("manipulation").get<std::string>());
    if (!manip) throw DataError(where + ": unknown manipulation in report");
    report.config.manipulation = *manip;
    report.config.setting = config.at("setting").get<std::string>();
    report.accuracy = r.at("accuracy").get<double>();
    reports.push_back(std::move(report));
  }
  return reports;
}

void run_report(const RunConfig& config, Bundle& bundle) {
  if (config.report.inputs.empty())
    throw ConfigError("config.report.inputs: required for the report command");
  std::set<std::string> stems;
  for (const fs::path& input : config.report.inputs) {
    std::ifstream in(input, std::ios::binary);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
      throw DataError("report input is not valid JSON: " + input.string());
    std::string stem = input.stem().string();
    if (!stems.insert(stem).second)
      throw DataError("report inputs share the stem '" + stem + "'");
    std::string rendered;
    if (j.is_array()) {
      rendered = grid_markdown(grid_from_json(j, input.string()));
    } else if (j.is_object() && j.contains("labels") && j.contains("values")) {
      rendered = to_markdown(matrix_from_json(j, input.string()));
    } else if (j.is_object() && j.contains("domains") && j.contains("counting")) {
      rendered = coverage_markdown(coverage_from_json(j));
    } else {
      throw DataError("unrecognized artifact shape: " + input.string());
    }
    bundle.write_text(stem + ".md", rendered);
  }
}

}  // namespace

fs::path run_command(Command command, const RunConfig& config) {
  auto started = std::chrono::steady_clock::now();
  Bundle bundle(config.out_dir, to_string(command), config.seed);
  bundle.write_json("resolved_config.json", config.resolved);
  switch (command) {
    case Command::Clean: run_clean(config, bundle); break;
    case Command::Divergence: run_divergence(config, bundle); break;
    case Command::Classify: run_classify(config, bundle, false); break;
    case Command::Transfer: run_classify(config, bundle, true); break;
    case Command::Wikify: run_wikify(config, bundle); break;
    case Command::Synth: run_synth(config, bundle); break;
    case Command::Report: run_report(config, bundle); break;
  }
  if (command != Command::Classify && command != Command::Transfer) {
    double wall = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    bundle.write_json("timings.json", {{"wall_seconds", wall}});
  }
  return bundle.commit();
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"corpus forensics toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)")
      ->required()
      ->envname("CORPEX_CONFIG");
  uint64_t seed_value = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed_value,
                                         "master seed override")
                              ->envname("CORPEX_SEED");
  size_t workers_value = 0;
  CLI::Option* workers_opt =
      app.add_option("--workers", workers_value, "worker count override")
          ->envname("CORPEX_WORKERS");
  bool offline = false;
  app.add_flag("--offline", offline, "force the offline snapshot KB")
      ->envname("CORPEX_OFFLINE");
  std::string out_dir;
  CLI::Option* out_opt = app.add_option("--out", out_dir,
                                        "output directory override")
                             ->envname("CORPEX_OUT");

  std::map<std::string, Command> commands = {
      {"clean", Command::Clean},         {"divergence", Command::Divergence},
      {"classify", Command::Classify},   {"transfer", Command::Transfer},
      {"wikify", Command::Wikify},       {"synth", Command::Synth},
      {"report", Command::Report}};
  for (const auto& [name, command] : commands) {
    std::string help = "run the " + name + " pipeline stage";
    app.add_subcommand(name, help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    json error{{"error", {{"category", "config"}, {"message", e.what()}}}};
    std::cerr << error.dump() << "\n";
    return kExitConfig;
  }

  std::string category;
  std::string message;
  int code = 1;
  try {
    RunConfig config = validate_config(config_path);
    CliOverrides overrides;
    if (seed_opt->count() > 0) overrides.seed = seed_value;
    if (workers_opt->count() > 0) overrides.workers = workers_value;
    overrides.offline = offline;
    if (out_opt->count() > 0) overrides.out_dir = out_dir;
    apply_overrides(config, overrides);

    Command command = commands.at(app.get_subcommands().front()->get_name());
    fs::path bundle = run_command(command, config);
    std::cout << bundle.string() << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    category = "config";
    message = e.what();
    code = kExitConfig;
  } catch (const DataError& e) {
    category = "data";
    message = e.what();
    code = kExitData;
  } catch (const TrainingError& e) {
    category = "training";
    message = e.what();
    code = kExitTraining;
  } catch (const NetworkError& e) {
    category = "network";
    message = e.what();
    code = kExitNetwork;
  } catch (const std::exception& e) {
    category = "internal";
    message = e.what();
    code = 1;
  }
  json error{{"error", {{"category", category}, {"message", message}}}};
  std::cerr << error.dump() << "\n";
  return code;
}

}  // namespace corpex
