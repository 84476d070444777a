#include "fkms/fkms.h"

#include <string>

#include "scenario.hpp"

struct fkms_scenario {
  fkms::Scenario impl;
  bool has_run = false;

  explicit fkms_scenario(fkms::Scenario s) : impl(std::move(s)) {}
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

fkms_status from_status(fkms::RunStatus st) {
  return static_cast<fkms_status>(static_cast<int>(st));
}

}  // namespace

extern "C" {

const char* fkms_version(void) { return "0.1.0"; }

const char* fkms_last_error(void) { return g_last_error.c_str(); }

fkms_status fkms_scenario_create_from_file(const char* path,
                                           fkms_scenario** out) {
  if (!path || !out) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  try {
    auto s = fkms::Scenario::from_file(path);
    if (!s.error_message().empty()) {
      set_error(s.error_message());
      return FKMS_BAD_CONFIG;
    }
    *out = new fkms_scenario(std::move(s));
    return FKMS_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FKMS_INTERNAL_ERROR;
  }
}

fkms_status fkms_scenario_create_from_string(const char* json_text,
                                             fkms_scenario** out) {
  if (!json_text || !out) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  try {
    *out = new fkms_scenario(fkms::Scenario::from_string(json_text));
    return FKMS_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FKMS_INTERNAL_ERROR;
  }
}

fkms_status fkms_scenario_set_output_dir(fkms_scenario* s, const char* dir) {
  if (!s || !dir) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  s->impl.set_output_dir(dir);
  return FKMS_OK;
}

fkms_status fkms_scenario_set_experiment(fkms_scenario* s, const char* name) {
  if (!s || !name) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  s->impl.set_experiment(name);
  return FKMS_OK;
}

fkms_status fkms_scenario_set_seed(fkms_scenario* s, long long seed) {
  if (!s) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  s->impl.set_seed(seed);
  return FKMS_OK;
}

fkms_status fkms_scenario_run(fkms_scenario* s) {
  if (!s) {
    set_error("null argument");
    return FKMS_BAD_CONFIG;
  }
  const auto st = s->impl.run();
  s->has_run = true;
  if (st != fkms::RunStatus::ok && !s->impl.error_message().empty()) {
    set_error(s->impl.error_message());
  }
  return from_status(st);
}

const char* fkms_scenario_report_json(const fkms_scenario* s) {
  if (!s || !s->has_run || s->impl.report_json().empty()) return nullptr;
  return s->impl.report_json().c_str();
}

void fkms_scenario_destroy(fkms_scenario* s) { delete s; }

}  // extern "C"
