from django.contrib import admin
from dynamics.models import FittedConstant


@admin.register(FittedConstant)
class FittedConstantAdmin(admin.ModelAdmin):
    """Read-only view of the fitted-constant cache."""
    list_display = ('kind', 'polynomial', 'character', 'seed', 'samples', 'value', 'created_at')
    list_filter = ('kind',)
    search_fields = ('polynomial', 'character')
    readonly_fields = ('kind', 'polynomial', 'character', 'seed', 'samples', 'value', 'created_at')

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False
