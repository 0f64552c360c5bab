#pragma once

#include "facepref/classifiers/logistic.hpp"
#include "facepref/classifiers/mlp.hpp"
#include "facepref/classifiers/model.hpp"
#include "facepref/classifiers/svm.hpp"
#include "facepref/classifiers/types.hpp"
#include "facepref/dataset.hpp"
#include "facepref/embedding_client.hpp"
#include "facepref/errors.hpp"
#include "facepref/evaluation/metrics.hpp"
#include "facepref/evaluation/report.hpp"
#include "facepref/evaluation/roc.hpp"
#include "facepref/evaluation/skew_normal.hpp"
#include "facepref/evaluation/split.hpp"
#include "facepref/evaluation/studies.hpp"
#include "facepref/features.hpp"
#include "facepref/http_server.hpp"
#include "facepref/random.hpp"
#include "facepref/service.hpp"
#include "facepref/synthetic.hpp"
