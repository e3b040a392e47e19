import io
import json
import os
import shutil
import tempfile
from contextlib import redirect_stderr
from unittest import TestCase

import pandas as pd
from django.core.management import ManagementUtility, call_command
from django.core.management.base import CommandError

from ..network import FeatureSet, load_file

def run(*args, **options):
    out = io.StringIO()
    call_command(*args, stdout=out, **options)
    return out.getvalue()

def read_table(path):
    return pd.read_csv(path, comment='#', dtype={'participant_id': str})

class CommandTest(TestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.mkdtemp()
        cls.corpus = os.path.join(cls.tmp, 'corpus')
        run('synth', 'corpus', output=cls.corpus, duration=20, participants=3, seed=1)
        cls.labels = os.path.join(cls.corpus, 'synthetic_labels.csv')
        tables = []
        for participant in ('p01', 'p02', 'p03'):
            path = cls.path(f'{participant}.csv')
            run('extract', os.path.join(cls.corpus, f'synthetic_{participant}.wav'), output=path, labels=cls.labels,
                participant=participant)
            tables.append(read_table(path))
        cls.features = cls.path('features.csv')
        pd.concat(tables, ignore_index=True).to_csv(cls.features, index=False)
        cls.model = cls.path('model.bin')
        run('train', cls.features, output=cls.model, epochs=3)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)
        super().tearDownClass()

    @classmethod
    def path(cls, name):
        return os.path.join(cls.tmp, name)

    def test_corpus_written(self):
        labels = read_table(self.labels)
        self.assertEqual(sorted(labels['participant_id'].unique()), ['p01', 'p02', 'p03'])
        self.assertEqual(len(labels), 3 * 16)
        self.assertTrue(labels['label'].between(0, 4).all())

    def test_extract_columns(self):
        with open(self.path('p01.csv')) as f:
            self.assertTrue(f.readline().startswith('# config: '))
        table = read_table(self.path('p01.csv'))
        self.assertEqual(list(table.columns[:5]), ['participant_id', 'paradigm', 'condition', 'start_s', 'label'])
        self.assertEqual(table['start_s'].tolist(), [float(t) for t in range(16)])
        self.assertIn('syllables_per_second', table.columns)

    def test_extract_without_labels_to_stdout(self):
        out = run('extract', os.path.join(self.corpus, 'synthetic_p02.wav'), window_s=10, step_s=5)
        table = pd.read_csv(io.StringIO(out), comment='#')
        self.assertEqual(table['start_s'].tolist(), [0.0, 5.0, 10.0])

    def test_extract_needs_participant_for_shared_labels(self):
        with self.assertRaises(CommandError) as cm:
            run('extract', os.path.join(self.corpus, 'synthetic_p01.wav'), labels=self.labels)
        self.assertEqual(cm.exception.returncode, 2)

    def test_training_is_deterministic(self):
        again = self.path('again.bin')
        summary = run('train', self.features, output=again, epochs=3)
        self.assertIn('Trained base model', summary)
        with open(self.model, 'rb') as a, open(again, 'rb') as b:
            self.assertEqual(a.read(), b.read())
        self.assertEqual(load_file(self.model).feature_set, FeatureSet.BASE)

    def test_estimate_silence_is_zero(self):
        silent = self.path('silence.wav')
        run('synth', 'silence', output=silent, duration=8)
        out = run('estimate', silent, model=self.model)
        table = pd.read_csv(io.StringIO(out), comment='#')
        self.assertEqual(len(table), 4)
        self.assertTrue((table['estimate'] == 0).all())
        self.assertTrue(table['intensity_mean'].isna().all())

    def test_estimate_jsonl(self):
        out = run('estimate', os.path.join(self.corpus, 'synthetic_p01.wav'), model=self.model, format='jsonl',
                  clamp=True)
        records = [json.loads(line) for line in out.splitlines()]
        self.assertEqual([r['start_s'] for r in records], [float(t) for t in range(16)])
        self.assertTrue(all(0 <= r['estimate'] <= 4 for r in records))

    def test_stream_matches_estimate(self):
        audio = os.path.join(self.corpus, 'synthetic_p03.wav')
        streamed = [json.loads(line) for line in run('stream', model=self.model, input=audio, chunk_ms=300).splitlines()]
        whole = [json.loads(line) for line in run('estimate', audio, model=self.model, format='jsonl').splitlines()]
        self.assertEqual([(r['start_s'], r['estimate'], r['features']) for r in streamed],
                         [(r['start_s'], r['estimate'], r['features']) for r in whole])

    def test_jsonl_config_echo_on_stderr(self):
        audio = os.path.join(self.corpus, 'synthetic_p02.wav')
        for command, args in (('estimate', (audio, )), ('stream', ())):
            with self.subTest(command=command):
                err = io.StringIO()
                options = {'format': 'jsonl'} if command == 'estimate' else {'input': audio}
                out = run(command, *args, model=self.model, stderr=err, **options)
                self.assertTrue(err.getvalue().startswith('# config: '))
                self.assertNotIn('# config', out)
                self.assertEqual(len(out.splitlines()), 16)

    def test_eval_loso(self):
        model_config = self.path('train.json')
        with open(model_config, 'w') as f:
            json.dump({'epochs': 2, 'seed': 3}, f)
        out = run('eval', self.features, mode='loso', model_config=model_config, format='csv')
        report = pd.read_csv(io.StringIO(out), comment='#')
        overall = report[(report['dataset'] == 'unfiltered') & (report['condition'] == 'overall')]
        self.assertEqual(overall['n'].tolist(), [48])

    def test_eval_mode_table_count(self):
        with self.assertRaises(CommandError) as cm:
            run('eval', self.features, mode='cross')
        self.assertEqual(cm.exception.returncode, 2)

    def test_bench(self):
        out = run('bench', sizes=[1, 2], repeats=1, format='csv')
        table = pd.read_csv(io.StringIO(out), comment='#')
        self.assertEqual(len(table), 10)

    def test_missing_file_is_usage_error(self):
        with self.assertRaises(CommandError) as cm:
            run('estimate', self.path('missing.wav'), model=self.model)
        self.assertEqual(cm.exception.returncode, 2)

    def test_corrupt_model_is_runtime_error(self):
        broken = self.path('broken.bin')
        with open(broken, 'wb') as f:
            f.write(b'not a model')
        with self.assertRaises(CommandError) as cm:
            run('estimate', os.path.join(self.corpus, 'synthetic_p01.wav'), model=broken)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn('ModelFormatError', str(cm.exception))

    def test_feature_set_mismatch_is_runtime_error(self):
        cfg = self.path('fillers.json')
        with open(cfg, 'w') as f:
            json.dump({'features': {'fillers': 'on'}}, f)
        with self.assertRaises(CommandError) as cm:
            run('estimate', os.path.join(self.corpus, 'synthetic_p01.wav'), model=self.model, config=cfg)
        self.assertEqual(cm.exception.returncode, 1)

    def test_unknown_flag_exits_with_usage_error(self):
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as cm:
            ManagementUtility(['manage.py', 'estimate', '--no-such-flag', 'x.wav']).execute()
        self.assertEqual(cm.exception.code, 2)
