"""English stopword list used by :func:`alpool.corpus.clean_text`.

The list is part of the corpus format contract: changing it changes the
features produced for every corpus, so bump ``STOPWORDS_VERSION`` on edit.
"""

STOPWORDS_VERSION = 1

STOPWORDS = frozenset(
    """
    a about above after again against all also am an and any are as at
    be because been before being below between both but by
    can could did do does doing down during
    each either else ever few for from further
    had has have having he her here hers herself him himself his how
    i if in into is it its itself
    just me might more most must my myself
    no nor not now of off on once only or other ought our ours ourselves
    out over own
    same shall she should so some such
    than that the their theirs them themselves then there these they this
    those through to too
    under until up upon us
    very was we were what when where which while who whom whose why will
    with within without would
    yet you your yours yourself yourselves
    per via onto toward towards whether though although
    """.split()
)
