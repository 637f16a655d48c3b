class Model:
    '''
    # not a comment inside a docstring
    '''
    def fit(self):
        pass  # hack

    # approximation only valid for small angles
    #
    # see the derivation
